"""Shared types and conventions.

Units are hbar = 1 and the unperturbed Hamiltonian is -Laplacian plus a
point interaction at the origin with a single bound state of energy -1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from ionize.alpha import AlphaProfile


class ValidationError(ValueError):
    """Rejected parameters or configuration."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    def __init__(self, message: str, **diagnostics: Any):
        super().__init__(message)
        self.diagnostics = diagnostics


CONVENTIONS = ("physical", "printed")


@dataclass(frozen=True)
class BoundState:
    """c * exp(-|x|)/|x|.  The default constant gives unit L2 norm."""

    constant: float = 1.0 / math.sqrt(2.0 * math.pi)

    @classmethod
    def normalized(cls) -> "BoundState":
        return cls(1.0 / math.sqrt(2.0 * math.pi))

    @classmethod
    def literal(cls) -> "BoundState":
        # the 1/sqrt(4 pi) prefactor, whose squared norm is 1/2
        return cls(1.0 / math.sqrt(4.0 * math.pi))

    @property
    def norm2(self) -> float:
        return 2.0 * math.pi * self.constant**2

    @property
    def charge(self) -> float:
        """Coefficient of 1/(4 pi |x|) at the origin."""
        return 4.0 * math.pi * self.constant

    @property
    def amplitude(self) -> float:
        """Ratio to the normalized state."""
        return self.constant * math.sqrt(2.0 * math.pi)

    def __call__(self, x_norm):
        x = np.asarray(x_norm, dtype=float)
        with np.errstate(divide="ignore"):
            return self.constant * np.exp(-x) / x

    def fourier(self, k):
        """Transform int exp(-i k.x) psi(x) d^3x, a function of |k|."""
        k = np.asarray(k, dtype=float)
        return 4.0 * math.pi * self.constant / (1.0 + k * k)


@dataclass(frozen=True)
class ComplexPoint:
    """A Laplace variable split as p = p0 + i*omega*n with 0 <= Im p0 < omega."""

    value: complex
    omega: float
    n: int = field(init=False)
    p0: complex = field(init=False)

    def __post_init__(self):
        n = math.floor(self.value.imag / self.omega)
        im0 = self.value.imag - n * self.omega
        if im0 >= self.omega:
            n += 1
            im0 -= self.omega
        elif im0 < 0:
            n -= 1
            im0 += self.omega
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "p0", complex(self.value.real, im0))

    def reconstruct(self) -> complex:
        return complex(self.p0.real, self.p0.imag + self.omega * self.n)


@dataclass(frozen=True)
class ModelParams:
    r: float
    omega: float
    alpha: AlphaProfile
    paper_literal_normalization: bool = False
    convention: str = "physical"
    resonant_N: int | None = None

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def bound_state(self) -> BoundState:
        return BoundState.literal() if self.paper_literal_normalization else BoundState.normalized()

    @property
    def alpha0(self) -> float:
        return float(np.real(self.alpha.coefficient(0)))

    @property
    def coupling(self) -> float:
        """Prefactor of exp(-r sqrt(.))/r in the lattice cross terms.

        1 follows from transforming the time-domain equations; the
        "printed" convention uses (2 pi)^(-3/2) instead.
        """
        return 1.0 if self.convention == "physical" else (2.0 * math.pi) ** -1.5

    @property
    def resonant(self) -> bool:
        return self.resonant_N is not None

    def with_(self, **changes) -> "ModelParams":
        return validate_params(replace(self, **changes))


def resonance(omega: float, tol: float = 1e-12) -> int | None:
    inv = 1.0 / omega
    N = round(inv)
    if N >= 1 and abs(inv - N) < tol:
        return int(N)
    return None


def validate_params(params: ModelParams) -> ModelParams:
    if not (np.isfinite(params.r) and params.r > 0):
        raise ValidationError(f"degenerate separation: r = {params.r}")
    if not (np.isfinite(params.omega) and params.omega > 0):
        raise ValidationError(f"driving frequency must be positive, got {params.omega}")
    if params.convention not in CONVENTIONS:
        raise ValidationError(f"unknown convention {params.convention!r}")
    params.alpha.validate()
    if not math.isclose(params.alpha.omega, params.omega, rel_tol=0, abs_tol=0):
        raise ValidationError("alpha profile frequency differs from model frequency")
    return replace(params, resonant_N=resonance(params.omega))


def make_params(r: float = 1.0, omega: float = 3.0, alpha=None, **kw) -> ModelParams:
    if alpha is None:
        alpha = [[0, 1.0, 0.0], [1, 0.25, 0.0]]
    profile = alpha if isinstance(alpha, AlphaProfile) else AlphaProfile.from_config(alpha, omega)
    return validate_params(ModelParams(float(r), float(omega), profile, **kw))


DEFAULTS: dict[str, Any] = {
    "r": 1.0,
    "omega": 3.0,
    "alpha": [[0, 1.0, 0.0], [1, 0.25, 0.0]],
    "paper_literal_normalization": False,
    "convention": "physical",
    "t_max": 60.0,
    "n_steps": 6000,
    "N": 64,
}


def params_from_mapping(cfg: Mapping[str, Any]) -> ModelParams:
    merged = {**DEFAULTS, **cfg}
    try:
        r = float(merged["r"])
        omega = float(merged["omega"])
        literal = bool(merged["paper_literal_normalization"])
        convention = str(merged["convention"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad model field: {exc}") from exc
    if omega <= 0:
        raise ValidationError(f"driving frequency must be positive, got {omega}")
    profile = AlphaProfile.from_config(merged["alpha"], omega)
    return validate_params(
        ModelParams(r, omega, profile, paper_literal_normalization=literal, convention=convention)
    )


def load_config(source) -> tuple[ModelParams, dict[str, Any]]:
    """Read a JSON config (path, JSON text or mapping); returns params and the merged dict.

    json.JSONDecodeError propagates for unparsable input.
    """
    if isinstance(source, Mapping):
        cfg = dict(source)
    else:
        path = Path(source)
        cfg = json.loads(path.read_text())
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    return params_from_mapping(cfg), {**DEFAULTS, **cfg}
