"""Normalised sensitivity of R0 to each model constant.

``S_x = (x / R0) dR0/dx``: the relative change in R0 per relative change in
``x``.  R0 depends on neither ``alpha`` nor ``tau``, so those indices vanish.
"""
from __future__ import annotations

import dataclasses
import io
from pathlib import Path

from .errors import InvalidInputError, ViraldynError
from .model import PARAM_NAMES, ModelParams, infection_free_t0, r0

DEFAULT_REL_STEP = 1e-6
ANALYTIC_PARAMS = ("b", "c", "mu", "p")
CSV_HEADER = "parameter,index,method"


class UndefinedIndexError(ViraldynError, ArithmeticError):
    """The index is undefined because R0 vanishes at the baseline."""


def central_label(rel_step: float) -> str:
    return f"central_difference(h={rel_step:g})"


def _check_which(which: str):
    if which not in PARAM_NAMES:
        raise InvalidInputError(f"unknown parameter {which!r}; expected one of {', '.join(PARAM_NAMES)}")


def _central(params: ModelParams, which: str, base: float, rel_step: float) -> float:
    x = getattr(params, which)
    if x == 0.0:
        return 0.0
    dx = rel_step * x
    up = r0(params.replace(**{which: x + dx}))
    down = r0(params.replace(**{which: x - dx}))
    return (up - down) / (2.0 * dx) * x / base


def _analytic(params: ModelParams, which: str, base: float) -> float:
    if which == "mu":
        return -1.0
    # b, p enter (and c leaves) R0 only through the infection term b p T0 / (c mu)
    share = params.b * params.p * infection_free_t0(params) / (params.c * params.mu) / base
    return -share if which == "c" else share


def sensitivity_index(params: ModelParams, which: str, method: str = "central",
                      rel_step: float = DEFAULT_REL_STEP) -> float:
    """``S_which`` at ``params``.

    ``method`` is ``"central"`` (difference quotient on ``x (1 +- rel_step)``)
    or ``"analytic"`` (closed form; only for b, c, mu, p).
    """
    _check_which(which)
    base = r0(params)
    if base == 0.0:
        raise UndefinedIndexError("R0 is zero; the normalised index is undefined")
    if method == "central":
        if not 0.0 < rel_step < 1.0:
            raise InvalidInputError(f"rel_step must lie in (0, 1), got {rel_step!r}")
        return _central(params, which, base, rel_step)
    if method == "analytic":
        if which not in ANALYTIC_PARAMS:
            raise InvalidInputError(f"no analytic index for {which!r}; use one of {ANALYTIC_PARAMS}")
        return _analytic(params, which, base)
    raise InvalidInputError(f"unknown method {method!r}")


@dataclasses.dataclass(frozen=True)
class SensitivityReport:
    baseline: ModelParams
    indices: dict
    methods: dict

    def rows(self) -> list:
        return [(name, self.indices[name], self.methods[name]) for name in sorted(self.indices)]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for name, value, method in self.rows():
            buf.write(f"{name},{value:.17g},{method}\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def full_report(params: ModelParams, method: str = "central",
                rel_step: float = DEFAULT_REL_STEP) -> SensitivityReport:
    """Indices for all ten parameters.

    With ``method="analytic"`` the closed forms are used where they exist and
    the difference quotient elsewhere; each row records which one applied.
    """
    indices, methods = {}, {}
    for name in PARAM_NAMES:
        m = "analytic" if method == "analytic" and name in ANALYTIC_PARAMS else "central"
        indices[name] = sensitivity_index(params, name, m, rel_step)
        methods[name] = "analytic" if m == "analytic" else central_label(rel_step)
    return SensitivityReport(params, indices, methods)


def read_csv(path) -> list:
    """Rows ``(parameter, index, method)`` of a sensitivity CSV."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidInputError(f"{path}: expected header {CSV_HEADER!r}")
    rows = []
    for line in lines[1:]:
        name, value, method = line.split(",", 2)
        rows.append((name, float(value), method))
    return rows
