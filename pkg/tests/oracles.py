"""Reference computations that share no code with the package.

Each oracle re-derives a quantity from the model equations by a different
numerical route (generic polynomial roots, finite differences, dense
determinants, an adaptive ODE solver chained interval by interval).
"""
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve


def rates(pr):
    return pr.s, pr.d, pr.a, pr.t_max, pr.b, pr.alpha, pr.mu, pr.p, pr.c


def field(pr, y, y_lag):
    s, d, a, tm, b, al, mu, p, c = rates(pr)
    T, I, V = y
    Tl, _, Vl = y_lag
    crowd = 1 - (T + I) / tm
    return np.array([
        s - d * T + a * T * crowd - b * T * V / (1 + al * V),
        b * Tl * Vl / (1 + al * Vl) + a * I * crowd - mu * I,
        p * I - c * V,
    ])


def t0_roots(pr):
    """Positive root of s - dT + aT(1 - T/Tmax) via numpy.roots."""
    r = np.roots([-pr.a / pr.t_max, pr.a - pr.d, pr.s])
    return float(max(r.real))


def r0_direct(pr):
    t0 = t0_roots(pr)
    return (pr.b * pr.p * t0 / pr.c + pr.a * (1 - t0 / pr.t_max)) / pr.mu


def e2_fsolve(pr, guess):
    """Infected equilibrium by Newton-type solve of the full 3-d steady state,
    in log coordinates to keep the components positive."""
    def g(z):
        y = np.exp(z)
        return field(pr, y, y) / np.maximum(np.abs(y), 1.0)
    z, *_ = fsolve(g, np.log(guess), xtol=1e-14, full_output=True)
    return np.exp(z)


def fd_jacobians(pr, y, h=1e-20):
    """Complex-step Jacobians of the field w.r.t. current and lagged state.

    The field is analytic, so ``Im f(y + i h e_k) / h`` is the partial
    derivative to rounding, with no subtractive cancellation.
    """
    y = np.asarray(y, dtype=complex)
    jn = np.zeros((3, 3))
    jl = np.zeros((3, 3))
    for k in range(3):
        e = np.zeros(3, dtype=complex)
        e[k] = 1j * h
        jn[:, k] = field(pr, y + e, y).imag / h
        jl[:, k] = field(pr, y, y + e).imag / h
    return jn, jl


def char_det(j_now, j_lag, lam, tau):
    n = j_now.shape[0]
    return np.linalg.det(lam * np.eye(n) - j_now - j_lag * np.exp(-lam * tau))


def crossings(coeffs):
    """``(omega, tau_first)`` for every crossing of the imaginary axis.

    Solves ``|P(iw)|^2 - |Q(iw)|^2 = 0`` as a polynomial in ``w`` with
    numpy.roots and reads tau off the phase of ``-P(iw)/Q(iw)``.
    """
    if coeffs.degree == 3:
        P = np.poly1d([1.0, coeffs.a2, coeffs.a1, coeffs.a0])
    else:
        P = np.poly1d([1.0, coeffs.a1, coeffs.a0])
    Q = np.poly1d([coeffs.b1, coeffs.b0])
    # P(iw) = Pr(w) + i Pi(w)
    def split(poly):
        c = poly.coeffs[::-1]
        re = np.zeros(len(c))
        im = np.zeros(len(c))
        for k, ck in enumerate(c):
            unit = 1j ** k
            re[k] = ck * unit.real
            im[k] = ck * unit.imag
        return np.poly1d(re[::-1]), np.poly1d(im[::-1])
    pr_, pi_ = split(P)
    qr_, qi_ = split(Q)
    h = pr_ * pr_ + pi_ * pi_ - qr_ * qr_ - qi_ * qi_
    out = []
    for w in np.roots(h.coeffs):
        if abs(w.imag) > 1e-9 * max(1.0, abs(w)) or w.real <= 1e-12:
            continue
        w = float(w.real)
        ratio = -P(1j * w) / Q(1j * w)
        tau = (-np.angle(ratio)) % (2 * np.pi) / w
        out.append((w, float(tau)))
    return sorted(out, key=lambda x: x[1])


def steps_reference(pr, y0, t_end, rtol=1e-11, atol=1e-12):
    """Constant-history solution by chaining solve_ivp over [k tau, (k+1) tau].

    Returns a callable ``t -> state`` on ``[0, t_end]``.
    """
    tau = pr.tau
    y0 = np.asarray(y0, dtype=float)
    if tau == 0:
        sol = solve_ivp(lambda t, y: field(pr, y, y), (0, t_end), y0, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True)
        return sol.sol
    pieces = []

    def past(t):
        if t <= 0:
            return y0
        for lo, hi, s in pieces:
            if lo <= t <= hi:
                return s(t)
        raise ValueError(t)

    lo = 0.0
    y = y0
    while lo < t_end:
        hi = min(lo + tau, t_end)
        sol = solve_ivp(lambda t, y: field(pr, y, past(t - tau)), (lo, hi), y, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True)
        pieces.append((lo, hi, sol.sol))
        y = sol.y[:, -1]
        lo = hi

    def ev(t):
        return past(t)
    return ev
