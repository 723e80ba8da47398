"""Gradient-free bilevel optimization: PZOS and ZOS on routing and security games.

Instances and experiment specs are plain dicts here; the compiled core takes
them as JSON text.
"""

import json

from . import _core
from ._core import Error, InvalidArgument, SolverError, clarke_interval, git_blob_hash, goldstein_table

__all__ = [
    "Error",
    "InvalidArgument",
    "SolverError",
    "attacker_best_response",
    "clarke_interval",
    "default_spec",
    "generate_instance",
    "git_blob_hash",
    "goldstein_table",
    "run",
    "run_callables",
    "run_suite",
    "variance_sweep",
    "wardrop_equilibrium",
]


def generate_instance(kind, seed=1, index=0, targets=10):
    """Instance `index` of the stream used by the `gen` command."""
    return json.loads(_core.generate_instance(kind, seed, index, targets))


def wardrop_equilibrium(instance, tolls, tol=1e-6):
    return _core.wardrop_equilibrium(json.dumps(instance), tolls, tol)


def attacker_best_response(instance, defense, tol=1e-8):
    return _core.attacker_best_response(json.dumps(instance), defense, tol)


def run(instance, algorithm="pzos", **kwargs):
    """One optimization run from the instance's canonical start.

    Keyword arguments: iterations, mu, step, step_kind, q, project, seed,
    follower_tol.
    """
    return _core.run(json.dumps(instance), algorithm, **kwargs)


run_callables = _core.run_callables
variance_sweep = _core.variance_sweep


def default_spec(suite):
    return json.loads(_core.default_spec(suite))


def run_suite(spec, out_dir=""):
    """Paired suite. The summary comes back parsed; CSV tables stay text."""
    result = _core.run_suite(json.dumps(spec), str(out_dir))
    result["summary"] = json.loads(result["summary"])
    return result
