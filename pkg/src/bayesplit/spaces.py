"""Null / alternative regions of the community parameter.

Each model reduces community structure at the bipartition stage to one
quantity:

* ``"sbm"``: the pair ``(a, b)`` of within/between edge probabilities of a
  symmetric 2x2 block matrix.  Domain ``a >= b``.
* ``"ee"``: the within-block propensity ``a`` of ``[[a, 1-a], [1-a, a]]``.
  Domain ``[0.5, 1]``.
* ``"lsm"``: the pair of mixture means ``(mu_1, mu_2)``, through
  ``|mu_1 - mu_2|``.  Domain ``R^d x R^d``.

A :class:`ParamSpace` holds the threshold ``t`` and its two disjoint sides;
samplers receive a single :class:`Region` as their restriction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODELS = ("sbm", "ee", "lsm")


@dataclass(frozen=True)
class Region:
    model: str
    side: int  # 0 -> null (no structure), 1 -> structure
    t: float

    @property
    def is_point(self) -> bool:
        """True when the null region collapses to an equality constraint."""
        if self.side != 0:
            return False
        return self.t == (0.5 if self.model == "ee" else 0.0)

    def statistic(self, value) -> float:
        """Scalar summary the region constrains (``a - b``, ``a`` or ``|mu_1 - mu_2|``)."""
        if self.model == "ee":
            return float(value)
        x, y = value
        if self.model == "sbm":
            return float(x) - float(y)
        return float(np.linalg.norm(np.atleast_1d(np.asarray(x, float) - np.asarray(y, float))))

    def contains(self, value) -> bool:
        s = self.statistic(value)
        if self.model == "sbm":
            if s < 0:
                return False
            if self.side == 0:
                return s == 0 if self.is_point else s < self.t
            return s >= self.t
        if self.model == "ee":
            if not 0.5 <= s <= 1.0:
                return False
            if self.side == 0:
                return s == 0.5 if self.is_point else s <= self.t
            return s > self.t
        if self.side == 0:
            return s == 0 if self.is_point else s < self.t
        return s >= self.t

    def bounds(self) -> tuple[float, float]:
        """Interval of the constrained statistic (closedness per ``contains``)."""
        if self.model == "ee":
            return (0.5, self.t) if self.side == 0 else (self.t, 1.0)
        hi = 1.0 if self.model == "sbm" else np.inf
        return (0.0, self.t) if self.side == 0 else (self.t, hi)


@dataclass(frozen=True)
class ParamSpace:
    model: str
    t: float
    null: Region
    alt: Region

    def side(self, value) -> int | None:
        """0 or 1 for the region containing ``value``; None outside the domain."""
        if self.null.contains(value):
            return 0
        if self.alt.contains(value):
            return 1
        return None

    def __getitem__(self, side: int) -> Region:
        return (self.null, self.alt)[side]


def make_space(model: str, t: float) -> ParamSpace:
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    t = float(t)
    if model == "sbm" and not 0.0 <= t < 1.0:
        raise ValueError(f"sbm threshold must lie in [0, 1), got {t}")
    if model == "ee" and not 0.5 <= t < 1.0:
        raise ValueError(f"ee threshold must lie in [0.5, 1), got {t}")
    if model == "lsm" and not (t >= 0.0 and np.isfinite(t)):
        raise ValueError(f"lsm threshold must be >= 0, got {t}")
    return ParamSpace(model, t, Region(model, 0, t), Region(model, 1, t))
