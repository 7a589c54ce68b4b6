"""Periodic strength alpha(t) = sum_n alpha_n exp(-i n omega t) and its shift-span genericity."""
from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Number

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class AlphaProfile:
    """Finite Fourier series of a real periodic function.

    `coefficients` holds alpha_n for n >= 0; negative indices follow from
    alpha_{-n} = conj(alpha_n).
    """

    coefficients: tuple[complex, ...]
    omega: float

    @classmethod
    def from_dict(cls, coeffs: dict[int, complex], omega: float) -> "AlphaProfile":
        from ionize.model import ValidationError

        if not coeffs:
            return cls((0j,), float(omega))
        top = max(abs(int(n)) for n in coeffs)
        out = np.zeros(top + 1, dtype=complex)
        seen = {}
        for n, v in coeffs.items():
            n = int(n)
            v = complex(v)
            if n < 0:
                n, v = -n, v.conjugate()
            if n in seen and abs(seen[n] - v) > 1e-14 * max(1.0, abs(v)):
                raise ValidationError(f"reality violated at n={n}: alpha_n != conj(alpha_-n)")
            seen[n] = v
            out[n] = v
        if abs(out[0].imag) > 1e-14 * max(1.0, abs(out[0])):
            raise ValidationError("reality violated: alpha_0 must be real")
        out[0] = out[0].real
        return cls(tuple(out), float(omega))

    @classmethod
    def from_config(cls, value, omega: float) -> "AlphaProfile":
        """A bare number, or a list of [n, re, im] triples."""
        from ionize.model import ValidationError

        if isinstance(value, AlphaProfile):
            return value
        if isinstance(value, Number) and not isinstance(value, bool):
            return cls.from_dict({0: complex(value)}, omega)
        if not isinstance(value, (list, tuple)):
            raise ValidationError(f"alpha must be a number or a list of [n, re, im], got {value!r}")
        coeffs: dict[int, complex] = {}
        for item in value:
            if not isinstance(item, (list, tuple)) or len(item) not in (2, 3):
                raise ValidationError(f"bad alpha entry {item!r}")
            n = item[0]
            if isinstance(n, float) and n.is_integer():
                n = int(n)
            if not isinstance(n, int) or isinstance(n, bool):
                raise ValidationError(f"alpha index must be an integer, got {n!r}")
            try:
                v = complex(float(item[1]), float(item[2]) if len(item) == 3 else 0.0)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"bad alpha entry {item!r}") from exc
            if n < 0:
                n, v = -n, v.conjugate()
            if n in coeffs and coeffs[n] != v:
                raise ValidationError(f"reality violated at n={n}")
            coeffs[n] = v
        return cls.from_dict(coeffs, omega)

    def validate(self) -> None:
        from ionize.model import ValidationError

        c = np.asarray(self.coefficients, dtype=complex)
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise ValidationError("alpha coefficients must be finite")
        if abs(c[0].imag) > 0:
            raise ValidationError("reality violated: alpha_0 must be real")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValidationError("alpha frequency must be positive")

    @property
    def support(self) -> int:
        """Largest n with alpha_n != 0 (0 for a constant profile)."""
        nz = np.nonzero(np.asarray(self.coefficients))[0]
        return int(nz[-1]) if nz.size else 0

    def coefficient(self, n: int) -> complex:
        m = abs(n)
        if m >= len(self.coefficients):
            return 0j
        v = self.coefficients[m]
        return v if n >= 0 else v.conjugate()

    def full(self) -> dict[int, complex]:
        """All nonzero alpha_n, n in Z."""
        out = {}
        for n, v in enumerate(self.coefficients):
            if v != 0:
                out[n] = v
                if n:
                    out[-n] = v.conjugate()
        return out

    @property
    def l1_norm(self) -> float:
        c = np.abs(np.asarray(self.coefficients))
        return float(c[0] + 2.0 * c[1:].sum())

    def tail(self) -> np.ndarray:
        """(alpha_1, alpha_2, ...) up to the last nonzero entry."""
        return np.asarray(self.coefficients[1 : self.support + 1], dtype=complex)

    def scaled(self, c: float) -> "AlphaProfile":
        return AlphaProfile(tuple(c * np.asarray(self.coefficients)), self.omega)

    def evaluate(self, t):
        return evaluate(self, t)

    def extrema(self, samples: int = 2048) -> tuple[float, float]:
        tt = np.linspace(0.0, 2 * np.pi / self.omega, samples, endpoint=False)
        v = evaluate(self, tt)
        return float(v.min()), float(v.max())


def evaluate(profile: AlphaProfile, t):
    """alpha(t); the imaginary part of the raw sum is checked and dropped."""
    t = np.asarray(t, dtype=float)
    c = np.asarray(profile.coefficients, dtype=complex)
    total = np.full(t.shape, c[0], dtype=complex)
    for n in range(1, len(c)):
        if c[n] == 0:
            continue
        e = np.exp(-1j * n * profile.omega * t)
        # alpha_n e^{-in w t} + conj(alpha_n) e^{+in w t}
        total = total + c[n] * e + np.conj(c[n]) * np.conj(e)
    scale = max(1.0, profile.l1_norm)
    if np.any(np.abs(total.imag) >= 1e-12 * scale):
        raise ArithmeticError("alpha(t) has a non-negligible imaginary part")
    out = total.real
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GenericityReport:
    M: int
    residual: float
    residual_history: list[tuple[int, float]] = field(default_factory=list)
    tolerance: float = 1e-8
    trivially_nongeneric: bool = False

    @property
    def generic(self) -> bool:
        return self.residual < self.tolerance

    @property
    def verdict(self) -> str:
        if self.trivially_nongeneric:
            return "trivially nongeneric"
        return "generic" if self.generic else "nongeneric"

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "residual": self.residual,
            "residual_history": [[m, r] for m, r in self.residual_history],
            "tolerance": self.tolerance,
            "verdict": self.verdict,
        }


def shift_matrix(tail: np.ndarray, M: int) -> np.ndarray:
    """Columns S^j a for j < M, where S inserts a leading zero.

    Columns are kept at full length M + len(a) - 1 so that no entry of a
    shifted copy is lost; truncating them to a square block would make the
    lower-triangular system trivially solvable whenever a_1 != 0.
    """
    L = len(tail)
    rows = M + L - 1
    X = np.zeros((rows, M), dtype=complex)
    for j in range(M):
        X[j : j + L, j] = tail
    return X


def _residual(tail: np.ndarray, M: int) -> float:
    X = shift_matrix(tail, M)
    e1 = np.zeros(X.shape[0], dtype=complex)
    e1[0] = 1.0
    # column-pivoted QR; the residual is the part of e1 outside range(Q)
    Q, R, _ = scipy.linalg.qr(X, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > d[0] * max(X.shape) * np.finfo(float).eps)) if d.size and d[0] > 0 else 0
    Q = Q[:, :rank]
    proj = Q @ (Q.conj().T @ e1)
    res = np.linalg.norm(e1 - proj)
    return float(min(1.0, max(0.0, res)))


def genericity_residual(
    profile: AlphaProfile,
    M: int | None = None,
    Ms=(25, 50, 100, 200),
    tol: float = 1e-8,
) -> GenericityReport:
    """Distance from e_1 to the span of shifted copies of (alpha_1, alpha_2, ...).

    With M given, the history is computed over Ms values not exceeding M
    plus M itself.
    """
    if M is not None and M < 1:
        raise ValueError("M must be >= 1")
    sweep = sorted({m for m in Ms if M is None or m <= M} | ({M} if M else set()))
    tail = profile.tail()
    if tail.size == 0:
        hist = [(m, 1.0) for m in sweep]
        return GenericityReport(sweep[-1], 1.0, hist, tol, trivially_nongeneric=True)
    tail = tail / np.max(np.abs(tail))
    hist = [(m, _residual(tail, m)) for m in sweep]
    return GenericityReport(sweep[-1], hist[-1][1], hist, tol)
