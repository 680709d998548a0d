"""Estimator-style wrappers around the solver and the slotted baseline.

The scikit-learn conventions kept here are constructor-only
hyperparameters, ``get_params``/``set_params``, ``fit`` returning ``self``
and trailing-underscore fitted attributes.  ``fit`` takes one problem
instance rather than a sample matrix; ``predict`` maps a sequence of
instances to their throughputs.
"""
from __future__ import annotations

from os import PathLike

import numpy as np
from sklearn.base import BaseEstimator

from .core import DEFAULT_TOL, Instance, normalize
from .experiments import baseline_policy
from .io import instance_from_dict, load_instance
from .numerics import SearchConfig
from .solver import solve


def check_instance(obj) -> Instance:
    """Accept an Instance, its JSON dict form, or a path to a JSON file."""
    if isinstance(obj, Instance):
        return obj
    if isinstance(obj, dict):
        return instance_from_dict(obj)
    if isinstance(obj, (str, PathLike)):
        return load_instance(obj)
    raise TypeError(f"expected an Instance, dict or path, got {type(obj).__name__}")


class TwoHopScheduler(BaseEstimator):
    """Throughput-optimal offline schedule for one instance.

    Parameters
    ----------
    bracket_tol, max_iters, grid_points : search settings passed to
        :class:`~twohop.numerics.SearchConfig`.
    tol : relative tolerance of the feasibility checks.
    verify : re-check the solution against the feasibility and property
        suite (raises on failure).
    """

    def __init__(self, bracket_tol=1e-10, max_iters=200, grid_points=2048,
                 tol=DEFAULT_TOL, verify=True):
        self.bracket_tol = bracket_tol
        self.max_iters = max_iters
        self.grid_points = grid_points
        self.tol = tol
        self.verify = verify

    def _search(self) -> SearchConfig:
        return SearchConfig(self.bracket_tol, self.max_iters, self.grid_points)

    def _solve(self, instance):
        return solve(check_instance(instance), self._search(), self.tol, self.verify)

    def fit(self, instance, y=None):
        sol = self._solve(instance)
        self.instance_ = normalize(check_instance(instance))
        self.solution_ = sol
        self.policy_ = sol.policy
        self.throughput_ = sol.throughput
        self.region_ = str(sol.label)
        return self

    def predict(self, instances) -> np.ndarray:
        """Optimal throughput (nats) of each instance."""
        return np.array([self._solve(i).throughput for i in instances])

    def score(self, instances, y=None) -> float:
        """Mean optimal throughput per unit time."""
        insts = [check_instance(i) for i in instances]
        return float(np.mean([self._solve(i).throughput / i.T for i in insts]))


class SlottedBaseline(BaseEstimator):
    """Fixed half/half slots, each hop optimal on its own."""

    def fit(self, instance, y=None):
        res = baseline_policy(check_instance(instance))
        self.result_ = res
        self.policy_ = res.policy
        self.throughput_ = res.throughput
        return self

    def predict(self, instances) -> np.ndarray:
        return np.array([baseline_policy(check_instance(i)).throughput for i in instances])

    def uplift(self, instances, scheduler: TwoHopScheduler | None = None) -> np.ndarray:
        """Optimal minus baseline throughput, per instance."""
        scheduler = scheduler or TwoHopScheduler()
        insts = [check_instance(i) for i in instances]
        return scheduler.predict(insts) - self.predict(insts)
