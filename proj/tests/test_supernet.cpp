#include "agentsearch/rng.hpp"
#include "agentsearch/supernet.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace agentsearch;

namespace {

QueryFeatures plain_features(std::size_t dim = 8)
{
    QueryFeatures f;
    f.domain_tag = "math";
    f.user_tier = "standard";
    f.feature_vector.assign(dim, 0.0);
    return f;
}

double layer_sum(const LayerDistribution& d)
{
    double s = 0.0;
    for (double p : d.probs) s += p;
    return s;
}

}  // namespace

TEST_CASE("featurize scales complexity and one-hot encodes domain and tier")
{
    FeatureSchema schema;
    const auto zero = featurize({"math", 0.0, "standard", {}}, schema);
    CHECK(zero.feature_vector.size() == schema.feature_dim);
    CHECK(zero.feature_vector[schema.complexity_slot()] == 0.0);

    const auto f = featurize({"math", 3.2, "standard", {}}, schema);
    CHECK(f.feature_vector[schema.complexity_slot()] == doctest::Approx(0.64).epsilon(1e-15));
    CHECK(f.feature_vector[0] == 1.0);
    CHECK(f.feature_vector[1] == 0.0);
    CHECK(f.feature_vector[schema.complexity_slot() + 1] == 1.0);  // tier:standard
    CHECK(featurize({"math", 3.2, "standard", {}}, schema).feature_vector == f.feature_vector);
}

TEST_CASE("featurize rejects bad metadata naming the culprit")
{
    FeatureSchema schema;
    try {
        featurize({"astrology", 1.0, "standard", {}}, schema);
        FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("astrology") != std::string::npos);
    }
    CHECK_THROWS_AS(featurize({"math", 5.5, "standard", {}}, schema), std::invalid_argument);
    CHECK_THROWS_AS(featurize({"math", 1.0, "gold", {}}, schema), std::invalid_argument);
}

TEST_CASE("layer distributions: symmetry, singleton and softmax oracle")
{
    auto s = make_supernet({"A", "B"}, 2, 8);
    const auto f = plain_features();
    auto d = layer_distribution(s, 1, f);
    CHECK(d.choices == std::vector<std::string>{"A", "B"});
    CHECK(d.probs[0] == doctest::Approx(0.5));
    CHECK(d.probs[1] == doctest::Approx(0.5));
    CHECK(layer_distribution(s, 2, f).prob_of(kExit) == doctest::Approx(1.0 / 3.0));

    auto single = make_supernet({"A"}, 1, 8);
    CHECK(layer_distribution(single, 1, f).probs == std::vector<double>{1.0});

    s.logits[0]["A"] = std::log(0.5) + 0.5;
    s.logits[0]["B"] = std::log(0.5);
    d = layer_distribution(s, 1, f);
    // sigma(0.5) to 16 digits
    CHECK(std::abs(d.probs[0] - 0.6224593312018546) < 1e-12);
    CHECK(std::abs(d.probs[1] - 0.3775406687981454) < 1e-12);
}

TEST_CASE("conditioning shifts logits linearly")
{
    auto s = make_supernet({"A", "B"}, 1, 8);
    s.conditioning["A"][0] = 2.0;
    auto f = plain_features();
    f.feature_vector[0] = 1.0;
    const auto d = layer_distribution(s, 1, f);
    const auto ref = oracle::conditioned_probs(s, 1, f.feature_vector);
    CHECK(std::abs(d.prob_of("A") - static_cast<double>(ref.at("A"))) < 1e-15);
    CHECK(std::abs(d.prob_of("A") - 1.0 / (1.0 + std::exp(-2.0))) < 1e-15);
    CHECK(base_distribution(s, 1).prob_of("A") == doctest::Approx(0.5));
}

TEST_CASE("layer 1 never holds EXIT; later layers always do")
{
    const auto s = make_supernet({"A", "B", "C"}, 3, 8);
    CHECK(s.logits[0].count(kExit) == 0);
    CHECK(s.logits[1].count(kExit) == 1);
    CHECK(s.logits[2].count(kExit) == 1);
    CHECK_NOTHROW(s.validate());
    CHECK_THROWS_AS(layer_distribution(s, 0, plain_features()), std::out_of_range);
    CHECK_THROWS_AS(layer_distribution(s, 4, plain_features()), std::out_of_range);
}

TEST_CASE("sampler: forced cases and determinism")
{
    const auto f = plain_features();
    auto one = make_supernet({"A"}, 1, 8);
    const auto a = sample_architecture(one, f, 7);
    CHECK(a.operator_ids() == std::vector<std::string>{"A"});
    CHECK(a.terminated_by == Termination::max_layers);

    auto s = make_supernet({"A", "B"}, 3, 8);
    s.logits[1]["A"] = -1e9;
    s.logits[1]["B"] = -1e9;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto arch = sample_architecture(s, f, seed);
        CHECK(arch.steps.size() == 1);
        CHECK(arch.terminated_by == Termination::exit);
    }
    const auto u = make_supernet({"A", "B", "C"}, 4, 8);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CHECK(sample_architecture(u, f, seed) == sample_architecture(u, f, seed));
    }
}

TEST_CASE("P([A]) under uniform two-layer {A,B} is 1/6, empirically and exactly")
{
    const auto s = make_supernet({"A", "B"}, 2, 8);
    const auto f = plain_features();
    Architecture only_a;
    only_a.steps = {{1, "A"}};
    only_a.terminated_by = Termination::exit;
    CHECK(std::abs(architecture_probability(s, f, only_a) - 1.0 / 6.0) < 1e-15);

    const int n = 100000;
    int hits = 0;
    for (int seed = 0; seed < n; ++seed) {
        if (sample_architecture(s, f, static_cast<std::uint64_t>(seed)) == only_a) ++hits;
    }
    const double p = 1.0 / 6.0;
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(static_cast<double>(hits) / n - p) < 3 * sigma);
}

TEST_CASE("architecture_probability: trivial products, enumeration sum, errors")
{
    const auto f = plain_features();
    auto one = make_supernet({"A"}, 1, 8);
    Architecture a;
    a.steps = {{1, "A"}};
    a.terminated_by = Termination::max_layers;
    CHECK(architecture_probability(one, f, a) == 1.0);

    auto s = make_supernet({"A", "B"}, 2, 8);
    s.logits[1]["A"] = -800.0;
    s.logits[1]["B"] = -800.0;
    a.terminated_by = Termination::exit;
    CHECK(architecture_probability(s, f, a) == doctest::Approx(0.5).epsilon(1e-12));

    const auto u = make_supernet({"A", "B"}, 2, 8);
    const auto all = oracle::enumerate_architectures({"A", "B"}, 2);
    CHECK(all.size() == 6);
    double total = 0.0;
    for (const auto& arch : all) total += architecture_probability(u, f, arch);
    CHECK(std::abs(total - 1.0) < 1e-9);

    Architecture bad;
    bad.steps = {{1, "Z"}};
    bad.terminated_by = Termination::exit;
    CHECK_THROWS_AS(architecture_probability(u, f, bad), std::invalid_argument);
}

TEST_CASE("early-exit architectures score as their executed prefix")
{
    const auto s = make_supernet({"A", "B"}, 3, 8);
    const auto f = plain_features();
    Architecture a;
    a.steps = {{1, "A"}, {2, "B"}};
    a.terminated_by = Termination::early_exit;
    CHECK(architecture_probability(s, f, a) == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("update_probabilities matches the straight-line evaluation")
{
    const auto s = make_supernet({"A", "B"}, 1, 8);
    const auto next = update_probabilities(s, 1, {{"A", 1.0}, {"B", 0.0}}, 0.1, 0.5);
    const auto d = base_distribution(next, 1);
    // 0.9 * 0.5 + 0.1 * sigma(0.5)
    const long double expect = 0.45L + 0.1L * (1.0L / (1.0L + std::exp(-0.5L)));
    CHECK(std::abs(d.prob_of("A") - static_cast<double>(expect)) < 1e-12);
    CHECK(std::abs(d.prob_of("A") - 0.512246) < 1e-6);
    CHECK(std::abs(d.prob_of("B") - 0.487754) < 1e-6);
    CHECK(std::abs(layer_sum(d) - 1.0) < 1e-9);
    CHECK(next.version == s.version + 1);
}

TEST_CASE("update_probabilities: equal rewards are a no-op, mu = 1 lands on the target")
{
    auto s = make_supernet({"A", "B", "C"}, 2, 8);
    s.logits[1]["A"] = 0.3;
    s.logits[1]["C"] = -1.1;
    const auto before = base_distribution(s, 2);
    const auto same = base_distribution(update_probabilities(s, 2, {{"A", 0.7}, {"B", 0.7}, {"C", 0.7}}, 0.1, 0.5), 2);
    for (std::size_t i = 0; i < before.probs.size(); ++i) CHECK(std::abs(same.probs[i] - before.probs[i]) < 1e-12);

    const std::map<std::string, double> r{{"A", 0.9}, {"B", 0.1}, {"C", 0.4}};
    const auto full = base_distribution(update_probabilities(s, 2, r, 1.0, 0.5), 2);
    const auto pi = oracle::base_probs(s, 2);
    const long double exit_r = (0.9L + 0.1L + 0.4L) / 3.0L;
    std::vector<long double> z;
    for (const auto& [id, p] : pi) z.push_back(std::log(p) + 0.5L * (id == kExit ? exit_r : (long double)r.at(id)));
    const auto target = oracle::softmax(z);
    std::size_t i = 0;
    for (const auto& [id, p] : pi) {
        CHECK(std::abs(full.prob_of(id) - static_cast<double>(target[i++])) < 1e-12);
    }
    CHECK_THROWS_AS(update_probabilities(s, 2, r, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("update_probabilities clamps exact zeros instead of producing -inf")
{
    auto s = make_supernet({"A", "B"}, 1, 8);
    s.logits[0]["B"] = -2000.0;  // underflows to probability 0
    const auto next = update_probabilities(s, 1, {{"A", 0.0}, {"B", 1.0}}, 0.5, 0.5);
    CHECK_NOTHROW(next.validate());
    const auto d = base_distribution(next, 1);
    CHECK(std::isfinite(next.logits[0].at("B")));
    CHECK(std::abs(layer_sum(d) - 1.0) < 1e-9);
}

TEST_CASE("add_operator and remove_operator renormalize")
{
    const auto f = plain_features();
    const auto three = make_supernet({"A", "B", "C"}, 1, 8);
    OperatorSpec d;
    d.id = "D";
    const auto four = add_operator(three, d);
    for (const auto& id : {"A", "B", "C", "D"}) {
        CHECK(layer_distribution(four, 1, f).prob_of(id) == doctest::Approx(0.25));
    }

    auto deep = make_supernet({"A", "B", "C"}, 3, 8);
    deep.logits[1]["A"] = 0.4;
    deep.logits[1]["B"] = -0.2;
    const auto grown = add_operator(deep, d);
    for (int layer = 1; layer <= 3; ++layer) {
        const auto& row = deep.logits[static_cast<std::size_t>(layer - 1)];
        const double mean = (row.at("A") + row.at("B") + row.at("C")) / 3.0;
        CHECK(grown.logits[static_cast<std::size_t>(layer - 1)].at("D") == doctest::Approx(mean));
        CHECK(std::abs(layer_sum(layer_distribution(grown, layer, f)) - 1.0) < 1e-9);
    }
    const auto back = remove_operator(grown, "D");
    for (int layer = 1; layer <= 3; ++layer) {
        const auto a = layer_distribution(deep, layer, f);
        const auto b = layer_distribution(back, layer, f);
        REQUIRE(a.choices == b.choices);
        for (std::size_t i = 0; i < a.probs.size(); ++i) CHECK(std::abs(a.probs[i] - b.probs[i]) < 1e-12);
    }

    const auto uniform4 = make_supernet({"A", "B", "C", "D"}, 1, 8);
    const auto less = remove_operator(uniform4, "B");
    for (const auto& id : {"A", "C", "D"}) CHECK(layer_distribution(less, 1, f).prob_of(id) == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(add_operator(three, OperatorSpec{"A"}), std::invalid_argument);
    CHECK_THROWS_AS(remove_operator(make_supernet({"A"}, 2, 8), "A"), std::invalid_argument);
    CHECK_THROWS_AS(remove_operator(three, "Z"), std::invalid_argument);
}

TEST_CASE("equal stationary rewards hold the distribution over 200 updates")
{
    auto s = make_supernet({"A", "B", "C"}, 2, 8);
    const std::map<std::string, double> r{{"A", 0.2}, {"B", 0.2}, {"C", 0.2}, {kExit, 0.2}};
    s.logits[1]["A"] = 1.0;
    const auto start = base_distribution(s, 2);
    for (int i = 0; i < 200; ++i) s = update_probabilities(s, 2, r, 0.1, 0.5);
    const auto end = base_distribution(s, 2);
    for (std::size_t i = 0; i < start.probs.size(); ++i) CHECK(std::abs(end.probs[i] - start.probs[i]) < 1e-6);
}

TEST_CASE("registry versions increase and fused specs need two parents")
{
    OperatorRegistry reg;
    OperatorSpec a;
    a.id = "A";
    reg.add(a);
    a.prompt_template = "changed";
    reg.modify(a);
    CHECK(reg.at("A").version == 2);
    reg.modify(a);
    CHECK(reg.at("A").version == 3);
    CHECK_THROWS_AS(reg.add(a), std::invalid_argument);

    OperatorSpec fused;
    fused.id = "A+B";
    fused.provenance = Provenance::fused;
    fused.parents = {"A"};
    CHECK_THROWS_AS(reg.add(fused), std::invalid_argument);
    fused.parents = {"A", "B"};
    CHECK_NOTHROW(reg.add(fused));
    OperatorSpec exit_op;
    exit_op.id = kExit;
    CHECK_THROWS_AS(reg.add(exit_op), std::invalid_argument);
}

TEST_CASE("rng streams are stable and independent")
{
    CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform01();
        CHECK((u >= 0.0 && u < 1.0));
    }
    Rng c(9);
    const std::vector<double> probs{0.0, 1.0, 0.0};
    for (int i = 0; i < 20; ++i) CHECK(c.categorical(probs) == 1);
}
