"""Seeded synthetic panels with a known data-generating process.

The model is ``y_it = intercept + x_it' beta + scale_i * (u_i + e_it)``
with ``u_i ~ N(0, sigma_u^2)`` and ``e_it ~ N(0, sigma_e^2)``.

Random numbers come from ``PortableRNG`` (generator id ``pcg64-bm/1``):
raw 64-bit outputs of numpy's PCG64 bit generator, mapped to uniforms as
``(raw >> 11) * 2**-53`` and to normals by the Box-Muller transform
computed with the ``math`` module. Only the bit generator is used, so the
stream does not depend on numpy's distribution code. Draw order is: all
``u_i``, then regressors entity by entity (periods ascending, regressors
in order within a period), then all ``e_it`` in the same order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import PanelDataset
from .exceptions import UsageError

GENERATOR_ID = "pcg64-bm/1"


class PortableRNG:
    def __init__(self, seed: int):
        self._bits = np.random.PCG64(int(seed) & (2 ** 64 - 1))

    def uniform(self, size: int) -> list[float]:
        raw = self._bits.random_raw(size)
        return [int(r >> np.uint64(11)) * 2.0 ** -53 for r in np.atleast_1d(raw)]

    def normal(self, size: int) -> list[float]:
        out = []
        while len(out) < size:
            u1, u2 = self.uniform(2)
            r = math.sqrt(-2.0 * math.log(1.0 - u1))
            out.append(r * math.cos(2.0 * math.pi * u2))
            out.append(r * math.sin(2.0 * math.pi * u2))
        return out[:size]


@dataclass(frozen=True)
class RegressorLaw:
    kind: str = "uniform"
    a: float = 0.0
    b: float = 10.0

    def __post_init__(self):
        if self.kind not in ("uniform", "gaussian"):
            raise UsageError(f"regressor law must be 'uniform' or 'gaussian', got {self.kind!r}")
        if self.kind == "uniform" and not self.a < self.b:
            raise UsageError(f"uniform({self.a}, {self.b}) needs a < b")
        if self.kind == "gaussian" and self.b < 0:
            raise UsageError("gaussian standard deviation must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "RegressorLaw":
        """``uniform:a:b`` or ``gaussian:mean:sd``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"regressor law {text!r} must look like uniform:a:b or gaussian:mean:sd")
        try:
            return cls(parts[0], float(parts[1]), float(parts[2]))
        except ValueError:
            raise UsageError(f"regressor law {text!r} has non-numeric parameters") from None


@dataclass(frozen=True)
class PanelDGP:
    n_entities: int = 8
    n_periods: int = 12
    beta: tuple = (2.0, 3.0)
    intercept: float = 10.0
    sigma_u: float = 4.0
    sigma_e: float = 1.0
    per_entity_scale: tuple | None = None
    regressor_law: tuple = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if not self.beta:
            raise UsageError("beta needs at least one slope")
        if self.n_entities < 2 or self.n_periods < 2:
            raise UsageError("need at least 2 entities and 2 periods")
        if self.sigma_u < 0 or self.sigma_e < 0:
            raise UsageError("sigma_u and sigma_e must be non-negative")
        laws = tuple(self.regressor_law) or (RegressorLaw(),)
        if len(laws) == 1:
            laws = laws * len(self.beta)
        if len(laws) != len(self.beta):
            raise UsageError(f"{len(laws)} regressor laws for {len(self.beta)} slopes")
        object.__setattr__(self, "regressor_law", laws)
        if self.per_entity_scale is not None:
            scale = tuple(float(s) for s in self.per_entity_scale)
            if len(scale) != self.n_entities or any(s < 0 for s in scale):
                raise UsageError("per_entity_scale needs one non-negative value per entity")
            object.__setattr__(self, "per_entity_scale", scale)
        if not 0 <= int(self.seed) < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TruthRecord:
    beta: tuple
    intercept: float
    sigma_u: float
    sigma_e: float
    entity_effects: tuple
    per_entity_scale: tuple
    seed: int
    generator: str = GENERATOR_ID
    regressors: tuple = field(default_factory=tuple)

    def as_dict(self):
        return {
            "generator": self.generator,
            "seed": self.seed,
            "beta": list(self.beta),
            "regressors": list(self.regressors),
            "intercept": self.intercept,
            "sigma_u": self.sigma_u,
            "sigma_e": self.sigma_e,
            "entity_effects": list(self.entity_effects),
            "per_entity_scale": list(self.per_entity_scale),
        }


def generate(dgp: PanelDGP):
    """Draw a balanced panel; returns ``(dataset, truth)``.

    Variables are ``y`` and ``x1..xk``; entities are ``E01``, ``E02``, ...
    and periods ``1..T``.
    """
    rng = PortableRNG(dgp.seed)
    N, T, k = dgp.n_entities, dgp.n_periods, len(dgp.beta)
    u = [dgp.sigma_u * z for z in rng.normal(N)]

    X = np.empty((N, T, k))
    for i in range(N):
        for t in range(T):
            for j, law in enumerate(dgp.regressor_law):
                if law.kind == "uniform":
                    X[i, t, j] = law.a + (law.b - law.a) * rng.uniform(1)[0]
                else:
                    X[i, t, j] = law.a + law.b * rng.normal(1)[0]
    e = np.array(rng.normal(N * T)).reshape(N, T) * dgp.sigma_e
    scale = np.array(dgp.per_entity_scale if dgp.per_entity_scale is not None else [1.0] * N)

    y = dgp.intercept + X @ np.array(dgp.beta) + scale[:, None] * (np.array(u)[:, None] + e)
    width = len(str(N))
    entities = tuple(f"E{i + 1:0{width}d}" for i in range(N))
    periods = tuple(str(t + 1) for t in range(T))
    names = tuple(f"x{j + 1}" for j in range(k))
    variables = {"y": y, **{n: X[:, :, j] for j, n in enumerate(names)}}
    truth = TruthRecord(
        beta=dgp.beta, intercept=float(dgp.intercept), sigma_u=float(dgp.sigma_u),
        sigma_e=float(dgp.sigma_e), entity_effects=tuple(u),
        per_entity_scale=tuple(scale.tolist()), seed=int(dgp.seed), regressors=names,
    )
    return PanelDataset(entities, periods, variables), truth
