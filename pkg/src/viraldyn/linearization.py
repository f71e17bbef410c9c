"""Local stability of the equilibria under the intracellular delay.

Linearising about an equilibrium gives

    P(lam) + Q(lam) exp(-lam tau) = 0,
    P(lam) = lam^3 + a2 lam^2 + a1 lam + a0,    Q(lam) = b1 lam + b0

(a quadratic ``P`` and constant ``Q`` at the infection-free state, after the
decoupled ``T`` eigenvalue is factored out).  A root crosses the imaginary
axis at ``lam = i w`` only if ``|P(iw)| = |Q(iw)|``, i.e. ``z = w^2`` solves a
real polynomial (cubic at E2, quadratic at E1).  The smallest delay at which
such a crossing occurs is the Hopf threshold ``tau0``.
"""
from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
from scipy.signal import convolve2d

from .equilibria import Equilibrium, EquilibriumKind, solve_infected
from .errors import ContractError, InconsistencyError
from .model import ModelParams

_IMAG_TOL = 1e-10
_SIMPLE_TOL = 1e-9
_ARCCOS_SLACK = 1e-9
_DOUBLE_ROOT_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class JacobianPair:
    j_now: np.ndarray
    j_lag: np.ndarray


@dataclasses.dataclass(frozen=True)
class CharCoeffs:
    """Coefficients of ``lam^n + a2 lam^2 + a1 lam + a0 + (b1 lam + b0) e^{-lam tau}``.

    ``degree`` is 3 at the infected equilibrium and 2 at the infection-free one
    (then ``a2`` and ``b1`` are zero and unused).
    """

    a2: float
    a1: float
    a0: float
    b1: float
    b0: float
    degree: int

    def instantaneous(self, lam):
        if self.degree == 3:
            return ((lam + self.a2) * lam + self.a1) * lam + self.a0
        return (lam + self.a1) * lam + self.a0

    def delayed(self, lam):
        return self.b1 * lam + self.b0

    def evaluate(self, lam, tau):
        """Characteristic function at complex ``lam`` for delay ``tau``."""
        return self.instantaneous(lam) + self.delayed(lam) * np.exp(-lam * tau)

    def scale(self) -> float:
        return 1.0 + max(abs(self.a2), abs(self.a1), abs(self.a0), abs(self.b1), abs(self.b0))


class Classification(enum.Enum):
    STABLE_ALL_TAU = "StableAllTau"
    STABLE_BELOW_TAU0 = "StableBelowTau0"
    UNSTABLE_AT_TAU_ZERO = "UnstableAtTauZero"
    UNSTABLE = "Unstable"


@dataclasses.dataclass(frozen=True)
class CrossingAnalysis:
    """Imaginary-axis crossing data.

    For degree 3 the crossing polynomial is ``z^3 + A z^2 + B z + C``; for
    degree 2 it is ``z^2 + B z + C`` and ``A`` is None.  ``candidates`` holds
    ``(z, omega, tau_first, dF/dz)`` for every positive simple root, where
    ``tau_first`` is the smallest nonnegative delay at which ``i omega`` is a root.
    """

    A: float | None
    B: float
    C: float
    positive_z_roots: list
    candidates: list
    omega0: float | None
    transversality_sign: int | None

    def poly_derivative(self, z: float) -> float:
        if self.A is None:
            return 2.0 * z + self.B
        return (3.0 * z + 2.0 * self.A) * z + self.B


@dataclasses.dataclass(frozen=True)
class StabilityReport:
    equilibrium: Equilibrium
    tau: float
    routh_hurwitz_h1: bool
    cubic_coeffs: tuple | None
    positive_z_roots: list
    omega0: float | None
    tau0: float | None
    transversality_sign: int | None
    classification: Classification
    global_flags: frozenset
    tau0_candidates: list
    largest_root_transversality: int | None

    def as_dict(self) -> dict:
        st = self.equilibrium.state
        A, B, C = self.cubic_coeffs if self.cubic_coeffs is not None else (None, None, None)
        return {
            "equilibrium_kind": self.equilibrium.kind.value,
            "equilibrium_T": st.t_cells,
            "equilibrium_I": st.i_cells,
            "equilibrium_V": st.virions,
            "equilibrium_residual": self.equilibrium.residual,
            "r0": self.equilibrium.r0_at_params,
            "tau": self.tau,
            "routh_hurwitz_h1": self.routh_hurwitz_h1,
            "A": A,
            "B": B,
            "C": C,
            "positive_z_roots": list(self.positive_z_roots),
            "omega0": self.omega0,
            "tau0": self.tau0,
            "transversality_sign": self.transversality_sign,
            "classification": self.classification.value,
            "global_flags": sorted(self.global_flags),
            "tau0_candidates": [list(c) for c in self.tau0_candidates],
            "largest_root_transversality": self.largest_root_transversality,
        }


# --- Jacobians and characteristic coefficients -------------------------------

def jacobians(params: ModelParams, eq) -> JacobianPair:
    """Partial derivatives of the vector field at a constant state.

    ``j_now`` differentiates with respect to ``(T, I, V)`` at time t and
    ``j_lag`` with respect to ``(T, I, V)`` at time ``t - tau``.
    """
    T, I, V = eq.state if isinstance(eq, Equilibrium) else eq
    pr = params
    sat = 1.0 + pr.alpha * V
    dinc_dT = pr.b * V / sat          # d/dT of b T V / (1 + alpha V)
    dinc_dV = pr.b * T / (sat * sat)  # d/dV of the same
    k = pr.a / pr.t_max
    j_now = np.array([
        [pr.a - pr.d - k * (2.0 * T + I) - dinc_dT, -k * T, -dinc_dV],
        [-k * I, pr.a - pr.mu - k * (T + 2.0 * I), 0.0],
        [0.0, pr.p, -pr.c],
    ])
    j_lag = np.zeros((3, 3))
    j_lag[1, 0] = dinc_dT
    j_lag[1, 2] = dinc_dV
    return JacobianPair(j_now, j_lag)


def _bivariate_det(m):
    """Determinant of a square matrix whose entries are 2-D coefficient arrays
    ``c[i, j]`` of ``lam^i E^j``; cofactor expansion along the first row."""
    n = len(m)
    if n == 1:
        return m[0][0]
    total = None
    for col in range(n):
        minor = [row[:col] + row[col + 1:] for row in m[1:]]
        term = convolve2d(m[0][col], _bivariate_det(minor))
        if col % 2:
            term = -term
        if total is None:
            total = term
        else:
            shape = np.maximum(total.shape, term.shape)
            total = np.pad(total, [(0, shape[0] - total.shape[0]), (0, shape[1] - total.shape[1])])
            total[: term.shape[0], : term.shape[1]] += term
    return total


def _char_poly(j_now, j_lag):
    """Coefficients of ``det(lam I - j_now - E j_lag)`` as a 2-D array in (lam, E)."""
    n = j_now.shape[0]
    m = []
    for i in range(n):
        row = []
        for j in range(n):
            e = np.zeros((2, 2))
            e[0, 0] = -j_now[i, j]
            e[0, 1] = -j_lag[i, j]
            if i == j:
                e[1, 0] = 1.0
            row.append(e)
        m.append(row)
    return _bivariate_det(m)


def char_coeffs(params: ModelParams, eq: Equilibrium) -> CharCoeffs:
    """Characteristic coefficients from the expanded Jacobian determinant."""
    jp = jacobians(params, eq)
    j_now, j_lag = jp.j_now, jp.j_lag
    if eq.kind is EquilibriumKind.INFECTION_FREE:
        # With I = V = 0 the T column decouples; keep the (I, V) block.
        j_now, j_lag = j_now[1:, 1:], j_lag[1:, 1:]
    poly = _char_poly(j_now, j_lag)
    n = j_now.shape[0]
    size = float(np.max(np.abs(poly)))
    higher_e = poly[:, 2:] if poly.shape[1] > 2 else np.zeros(1)
    if np.max(np.abs(higher_e), initial=0.0) > 1e-12 * size:
        raise InconsistencyError("characteristic determinant has e^(-2 lam tau) terms")
    if abs(poly[n, 0] - 1.0) > 1e-12 or np.max(np.abs(poly[2:, 1]), initial=0.0) > 1e-12 * size:
        raise InconsistencyError("unexpected structure of the characteristic determinant")
    c = poly.tolist()
    if n == 3:
        return CharCoeffs(a2=c[2][0], a1=c[1][0], a0=c[0][0], b1=c[1][1], b0=c[0][1], degree=3)
    return CharCoeffs(a2=0.0, a1=c[1][0], a0=c[0][0], b1=0.0, b0=c[0][1], degree=2)


def routh_hurwitz_h1(coeffs: CharCoeffs) -> bool:
    """Routh-Hurwitz test for ``lam^3 + a2 lam^2 + (a1+b1) lam + (a0+b0)`` (delay zero).

    Only the two conditions ``a0 + b0 > 0`` and ``a2 (a1 + b1) > a0 + b0`` are
    checked; ``a2 > 0`` holds at every infected equilibrium.
    """
    if coeffs.degree != 3:
        raise ContractError("routh_hurwitz_h1 needs the cubic (infected equilibrium) coefficients")
    c0 = coeffs.a0 + coeffs.b0
    return c0 > 0 and coeffs.a2 * (coeffs.a1 + coeffs.b1) - c0 > 0


def _hurwitz_quadratic(coeffs: CharCoeffs) -> bool:
    return coeffs.a1 > 0 and coeffs.a0 + coeffs.b0 > 0


# --- polynomial roots -------------------------------------------------------

def cubic_real_roots(A: float, B: float, C: float) -> list:
    """Real roots of ``z^3 + A z^2 + B z + C``, ascending, each Newton-polished once.

    Trigonometric form when three real roots exist, Cardano otherwise.  A
    discriminant within ``1e-12`` (relative) of zero is treated as a double
    root, so tangencies are not lost to rounding.
    """
    shift = A / 3.0
    p = B - A * A / 3.0
    q = 2.0 * A ** 3 / 27.0 - A * B / 3.0 + C
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    size = (q / 2.0) ** 2 + abs(p / 3.0) ** 3
    if p >= 0.0 or disc > _DOUBLE_ROOT_TOL * size:
        sq = math.sqrt(max(disc, 0.0))
        u = float(np.cbrt(-q / 2.0 + sq))
        v = float(np.cbrt(-q / 2.0 - sq))
        xs = [u + v]
        if p == 0.0 and q == 0.0:
            xs += [0.0, 0.0]
    else:
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = (3.0 * q / (2.0 * p)) * math.sqrt(-3.0 / p)
        phi = math.acos(min(1.0, max(-1.0, arg))) / 3.0
        xs = [r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    roots = []
    for x in xs:
        z = x - shift
        f = ((z + A) * z + B) * z + C
        df = (3.0 * z + 2.0 * A) * z + B
        if df != 0.0:
            z -= f / df
        roots.append(z)
    return sorted(roots)


def _quadratic_real_roots(B: float, C: float) -> list:
    disc = B * B - 4.0 * C
    scale = 1.0 + abs(B) + abs(C)
    if disc < 0:
        if math.sqrt(-disc) / 2.0 >= _IMAG_TOL * scale:
            return []
        disc = 0.0
    sq = math.sqrt(disc)
    if B >= 0:
        r1 = (-B - sq) / 2.0
    else:
        r1 = (-B + sq) / 2.0
    r2 = C / r1 if r1 != 0.0 else -B - r1
    return sorted([r1, r2])


# --- crossings and the Hopf threshold ---------------------------------------

def crossing_polynomial(coeffs: CharCoeffs):
    """``(A, B, C)`` of the crossing polynomial; ``A`` is None for degree 2."""
    a2, a1, a0, b1, b0 = coeffs.a2, coeffs.a1, coeffs.a0, coeffs.b1, coeffs.b0
    if coeffs.degree == 3:
        return a2 * a2 - 2.0 * a1, a1 * a1 - 2.0 * a2 * a0 - b1 * b1, a0 * a0 - b0 * b0
    return None, a1 * a1 - 2.0 * a0, a0 * a0 - b0 * b0


def _cos_crossing(coeffs: CharCoeffs, omega: float) -> float:
    a2, a1, a0, b1, b0 = coeffs.a2, coeffs.a1, coeffs.a0, coeffs.b1, coeffs.b0
    w2 = omega * omega
    if coeffs.degree == 3:
        return (b0 * (a2 * w2 - a0) + b1 * omega * (w2 * omega - a1 * omega)) / (b0 * b0 + b1 * b1 * w2)
    return (w2 - a0) / b0


def hopf_tau0(coeffs: CharCoeffs, omega0: float) -> float:
    """Smallest nonnegative delay at which ``i omega0`` solves the characteristic equation.

    ``cos(omega0 tau)`` comes from the closed form; the branch of the arccos
    is chosen so that ``sin(omega0 tau)`` agrees with the imaginary part of
    ``-P(i omega0)/Q(i omega0)``.
    """
    if not omega0 > 0:
        raise ContractError(f"omega0 must be positive, got {omega0!r}")
    cos_arg = _cos_crossing(coeffs, omega0)
    if abs(cos_arg) > 1.0 + _ARCCOS_SLACK:
        raise InconsistencyError(
            f"arccos argument {cos_arg!r} outside [-1, 1]; omega0 is not a crossing frequency"
        )
    cos_arg = min(1.0, max(-1.0, cos_arg))
    lam = 1j * omega0
    sin_wt = -(-coeffs.instantaneous(lam) / coeffs.delayed(lam)).imag
    theta = math.acos(cos_arg)
    if sin_wt < 0:
        theta = 2.0 * math.pi - theta
    return theta / omega0


def crossing_analysis(coeffs: CharCoeffs) -> CrossingAnalysis:
    """Positive roots of the crossing polynomial and the first-crossing frequency.

    ``omega0`` is taken from the positive simple root whose first crossing
    delay is smallest; ``transversality_sign`` is the sign of the crossing
    polynomial's derivative there (positive means roots move right as tau grows).
    """
    A, B, C = crossing_polynomial(coeffs)
    if A is None:
        roots = _quadratic_real_roots(B, C)
        scale = 1.0 + abs(B) + abs(C)
    else:
        roots = cubic_real_roots(A, B, C)
        scale = 1.0 + abs(A) + abs(B) + abs(C)
    ca = CrossingAnalysis(A, B, C, [], [], None, None)
    positive = sorted(z for z in roots if z > 0)
    candidates = []
    for z in positive:
        slope = ca.poly_derivative(z)
        if abs(slope) <= _SIMPLE_TOL * scale:
            continue
        omega = math.sqrt(z)
        candidates.append((z, omega, hopf_tau0(coeffs, omega), slope))
    if not candidates:
        return dataclasses.replace(ca, positive_z_roots=positive)
    first = min(candidates, key=lambda c: c[2])
    return dataclasses.replace(
        ca,
        positive_z_roots=positive,
        candidates=candidates,
        omega0=first[1],
        transversality_sign=int(np.sign(first[3])),
    )


# --- classification ---------------------------------------------------------

def global_flags(params: ModelParams, eq: Equilibrium) -> frozenset:
    flags = set()
    r = eq.r0_at_params
    if r <= 1.0:
        flags.add("E1_GAS")
    if eq.kind is EquilibriumKind.INFECTED:
        T2, I2, _ = eq.state
        if params.a <= params.d + params.a / params.t_max * (T2 + I2):
            flags.add("E2_GAS_condition")
    if r > 1.0 and math.isclose(params.d, params.mu, rel_tol=1e-12):
        flags.add("noncytopathic_corollary")
    return frozenset(flags)


def classify(params: ModelParams, eq: Equilibrium) -> StabilityReport:
    """Stability of ``eq`` at the delay ``params.tau``.

    E1 is stable for every delay when R0 <= 1 and unstable otherwise.  E2 is
    unstable already at zero delay when (H1) fails, stable for every delay
    when no crossing frequency exists, and otherwise stable exactly for
    ``tau < tau0``.
    """
    coeffs = char_coeffs(params, eq)
    cross = crossing_analysis(coeffs)
    tau0 = None
    if cross.omega0 is not None:
        tau0 = min(c[2] for c in cross.candidates)
    largest = None
    if cross.candidates:
        largest = int(np.sign(cross.candidates[-1][3]))
    tau = params.tau

    if eq.kind is EquilibriumKind.INFECTION_FREE:
        h1 = _hurwitz_quadratic(coeffs)
        if eq.r0_at_params <= 1.0:
            cls = Classification.STABLE_ALL_TAU
        else:
            cls = Classification.UNSTABLE
        cubic = None
    else:
        h1 = routh_hurwitz_h1(coeffs)
        if not h1:
            cls = Classification.UNSTABLE_AT_TAU_ZERO
        elif tau0 is None:
            cls = Classification.STABLE_ALL_TAU
        elif tau < tau0:
            cls = Classification.STABLE_BELOW_TAU0
        else:
            cls = Classification.UNSTABLE
        cubic = (cross.A, cross.B, cross.C)

    return StabilityReport(
        equilibrium=eq,
        tau=tau,
        routh_hurwitz_h1=h1,
        cubic_coeffs=cubic,
        positive_z_roots=cross.positive_z_roots,
        omega0=cross.omega0,
        tau0=tau0,
        transversality_sign=cross.transversality_sign,
        classification=cls,
        global_flags=global_flags(params, eq),
        tau0_candidates=[(c[1], c[2]) for c in cross.candidates],
        largest_root_transversality=largest,
    )


def critical_delay(params: ModelParams):
    """``tau0`` at the infected equilibrium, or None if E2 is absent or never loses stability."""
    eq = solve_infected(params)
    if not isinstance(eq, Equilibrium):
        return None
    return classify(params, eq).tau0


# --- delay-length estimate --------------------------------------------------

@dataclasses.dataclass(frozen=True)
class DelayLengthEstimate:
    v_plus: float
    K1: float
    K2: float
    K3: float
    tau_plus: float | None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def delay_length_estimate(coeffs: CharCoeffs) -> DelayLengthEstimate:
    """Nyquist-type bound ``tau_plus`` on delays that keep E2 stable.

    ``tau_plus`` is None when ``K3 <= 0`` (no admissible delay) or ``K1 == 0``
    (degenerate quadratic in tau).
    """
    if coeffs.degree != 3:
        raise ContractError("delay_length_estimate needs the cubic coefficients")
    a2, a1, a0, b1, b0 = coeffs.a2, coeffs.a1, coeffs.a0, coeffs.b1, coeffs.b0
    if not a2 > 0:
        raise ContractError(f"a2 must be positive, got {a2!r}")
    v_plus = (abs(b1) + math.sqrt(b1 * b1 + 4.0 * a2 * (abs(a0) + abs(b0)))) / (2.0 * a2)
    K1 = abs(b0 - a1 * b1) / 2.0 * v_plus ** 2
    K2 = abs(b1) * v_plus ** 2 + abs(a2 * b0)
    K3 = a2 * a1 + a1 * b1 - a0 - b0
    tau_plus = None
    if K3 > 0 and K1 > 0:
        tau_plus = (-K2 + math.sqrt(K2 * K2 + 4.0 * K1 * K3)) / (2.0 * K1)
    return DelayLengthEstimate(v_plus, K1, K2, K3, tau_plus)
