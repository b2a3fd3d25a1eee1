"""Python front end to the agentsearch core.

Structured values are plain dicts and lists; they travel to the core as JSON.
"""

import json as _json

from . import _core
from ._core import ConfigError, CorruptionError, adaptive_weight, load_factor

__all__ = [
    "ConfigError",
    "CorruptionError",
    "adaptive_weight",
    "add_operator",
    "aggregate_cost",
    "architecture_probability",
    "default_config",
    "explain",
    "featurize",
    "gen_tasks",
    "layer_distribution",
    "load_factor",
    "make_supernet",
    "remove_operator",
    "replay",
    "run_eval",
    "run_search",
    "sample_architecture",
    "update_probabilities",
    "validate_config",
]


def _d(x):
    return _json.dumps(x)


def featurize(domain, complexity, tier="standard", factors=()):
    meta = {"domain": domain, "complexity": complexity, "tier": tier, "factors": list(factors)}
    return _json.loads(_core.featurize(_d(meta)))


def make_supernet(pool, num_layers, feature_dim=8):
    return _json.loads(_core.make_supernet(list(pool), num_layers, feature_dim))


def layer_distribution(state, layer, features):
    return _json.loads(_core.layer_distribution(_d(state), layer, _d(features)))


def sample_architecture(state, features, seed):
    return _json.loads(_core.sample_architecture(_d(state), _d(features), seed))


def architecture_probability(state, features, arch):
    return _core.architecture_probability(_d(state), _d(features), _d(arch))


def update_probabilities(state, layer, rewards, mu=0.1, gamma_fb=0.5):
    return _json.loads(_core.update_probabilities(_d(state), layer, dict(rewards), mu, gamma_fb))


def add_operator(state, op):
    return _json.loads(_core.add_operator(_d(state), _d(op)))


def remove_operator(state, op_id):
    return _json.loads(_core.remove_operator(_d(state), op_id))


def aggregate_cost(dims):
    return _core.aggregate_cost(_d(dims))


def default_config():
    return _json.loads(_core.default_config())


def validate_config(config):
    """Returns the normalized config; raises ConfigError naming the bad key."""
    return _json.loads(_core.validate_config(_d(config)))


def gen_tasks(spec):
    return _json.loads(_core.gen_tasks(_d(spec)))


def run_search(config, tasks):
    """Returns {"log": ndjson text, "state": snapshot, "metrics": {...}}."""
    return _json.loads(_core.run_search(_d(config), _d(tasks)))


def run_eval(snapshot, config, tasks, seed=0):
    return _json.loads(_core.run_eval(_d(snapshot), _d(config), _d(tasks), seed))


def replay(log):
    return _json.loads(_core.replay(log))


def explain(log, query_id, structured=False, samples=200, seed=0):
    out = _core.explain(log, query_id, structured, samples, seed)
    return _json.loads(out) if structured else out
