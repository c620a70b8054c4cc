"""Planted sparse-recovery instances and their JSON form.

Randomness comes from counter-based Philox streams keyed by
``(seed, cell, trial)``, so any trial can be regenerated on its own and the
order in which trials run does not matter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dictionary import Dictionary, orthonormalize

SCHEMA = 1
SIGMA_FLOOR = 0.1
NOISE_SHRINK = 1.0 - 1e-12

_MATRIX_STREAM = 0
_INSTANCE_STREAM = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream for ``seed`` and an integer key path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def gaussian_matrix(n: int, m: int, seed: int) -> np.ndarray:
    """``n x m`` matrix with i.i.d. ``N(0, 1/n)`` entries."""
    return stream(seed, _MATRIX_STREAM).standard_normal((n, m)) / math.sqrt(n)


@dataclass
class ProblemInstance:
    """Measurement ``x = A s0 + noise`` with ``||noise|| <= eps`` and ``||s0||_0 = k``.

    ``A`` is the raw matrix as generated (not orthonormalized); when it came
    from the Gaussian generator, ``generator_seed`` records how to rebuild it.
    """

    n: int
    m: int
    k: int
    eps: float
    seed: int
    A: np.ndarray
    x: np.ndarray
    s0: np.ndarray
    generator_seed: int | None = None

    def dictionary(self) -> tuple[Dictionary, np.ndarray, float]:
        """Orthonormalized system ``(d, G x, eps_eff)``.

        Orthonormalizing maps the noise through ``G``, so the radius that
        bounds ``||A s0 - G x||`` becomes ``||G||_2 eps``.
        """
        d, xg = orthonormalize(self.A, self.x)
        eps_eff = self.eps * float(np.linalg.norm(d.G, 2)) if self.eps > 0 else 0.0
        return d, xg, eps_eff

    def to_json(self) -> str:
        out = {"schema": SCHEMA, "n": self.n, "m": self.m, "k": self.k,
               "eps": float(self.eps), "seed": int(self.seed)}
        if self.generator_seed is not None:
            out["A_generator"] = {"kind": "gaussian", "seed": int(self.generator_seed)}
        else:
            out["A"] = [[float(v) for v in row] for row in self.A]
        out["x"] = [float(v) for v in self.x]
        out["s0"] = [float(v) for v in self.s0]
        return json.dumps(out, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ProblemInstance":
        obj = json.loads(text)
        if obj.get("schema") != SCHEMA:
            raise ValueError(f"unsupported instance schema {obj.get('schema')!r}")
        n, m = int(obj["n"]), int(obj["m"])
        gen = obj.get("A_generator")
        if gen is not None:
            if gen.get("kind") != "gaussian":
                raise ValueError(f"unknown generator kind {gen.get('kind')!r}")
            A = gaussian_matrix(n, m, int(gen["seed"]))
            gseed = int(gen["seed"])
        else:
            A = np.array(obj["A"], dtype=np.float64).reshape(n, m)
            gseed = None
        s0 = np.array(obj.get("s0", np.zeros(m)), dtype=np.float64)
        return cls(n, m, int(obj["k"]), float(obj["eps"]), int(obj["seed"]), A,
                   np.array(obj["x"], dtype=np.float64), s0, gseed)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ProblemInstance":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def plant(rng: np.random.Generator, m: int, k: int, sigma_floor: float = SIGMA_FLOOR) -> np.ndarray:
    """``k``-sparse vector: uniform support, ``N(0,1)`` values redrawn until ``|v| >= 3 sigma_floor``."""
    s0 = np.zeros(m)
    if k == 0:
        return s0
    support = rng.choice(m, size=k, replace=False)
    vals = rng.standard_normal(k)
    low = np.abs(vals) < 3.0 * sigma_floor
    while np.any(low):
        vals[low] = rng.standard_normal(int(low.sum()))
        low = np.abs(vals) < 3.0 * sigma_floor
    s0[support] = vals
    return s0


def sphere_noise(rng: np.random.Generator, n: int, eps: float) -> np.ndarray:
    if eps == 0:
        return np.zeros(n)
    v = rng.standard_normal(n)
    return v * (eps * NOISE_SHRINK / np.linalg.norm(v))


def generate(
    n: int,
    m: int,
    k: int,
    eps: float = 0.0,
    seed: int = 0,
    A=None,
    cell: int = 0,
    trial: int = 0,
    sigma_floor: float = SIGMA_FLOOR,
) -> ProblemInstance:
    """Deterministic planted instance.

    Parameters
    ----------
    n, m, k : int
        Sizes; ``0 <= k < m``.
    eps : float
        Noise radius; the noise lies on the sphere of radius ``eps (1 - 1e-12)``.
    seed : int
        Master seed.  The Gaussian matrix (when ``A`` is not given) is drawn
        from the ``(seed, cell, trial)`` stream as well, so trials differ.
    A : array_like, optional
        Fixed raw matrix instead of the Gaussian generator.
    """
    if not m > n >= 1:
        raise ValueError(f"need m > n >= 1, got n={n}, m={m}")
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < m, got k={k}")
    if not eps >= 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    seed = int(seed)
    gseed = None
    if A is None:
        gseed = int(np.random.SeedSequence(seed, spawn_key=(2, cell, trial)).generate_state(1, np.uint64)[0])
        A = gaussian_matrix(n, m, gseed)
    else:
        A = np.asarray(A, dtype=np.float64)
        if A.shape != (n, m):
            raise ValueError(f"A has shape {A.shape}, expected {(n, m)}")
    rng = stream(seed, _INSTANCE_STREAM, cell, trial)
    s0 = plant(rng, m, k, sigma_floor)
    x = A @ s0 + sphere_noise(rng, n, eps)
    return ProblemInstance(n, m, k, float(eps), seed, A, x, s0, gseed)
