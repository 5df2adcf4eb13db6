from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from anyonlt.errors import InvalidInputError, LedgerIncompleteError, PreconditionError
from anyonlt.methods.radial import e2_lower_constant
from anyonlt.methods.special import bessel_i

log = logging.getLogger(__name__)


# ---------- Ledger ----------

class Provenance(str, Enum):
    EXACT = "exact-formula"
    MEASURED = "measured"
    ABSTRACT = "abstract-parameter"


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    value: Optional[float]
    provenance: Provenance
    formula_ref: str
    depends_on: Tuple[str, ...] = ()
    symbolic: Optional[str] = None
    note: str = ""

    @property
    def numeric(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["provenance"] = self.provenance.value
        d["depends_on"] = list(self.depends_on)
        return d


class ConstantLedger:
    """Named constants with provenance; abstract entries without a value turn dependants symbolic."""

    def __init__(self, entries: Optional[Iterable[LedgerEntry]] = None):
        self._entries: Dict[str, LedgerEntry] = {}
        for e in entries or ():
            self._entries[e.name] = e

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def names(self) -> List[str]:
        return list(self._entries)

    def copy(self) -> "ConstantLedger":
        return ConstantLedger(self._entries.values())

    def get(self, name: str) -> LedgerEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise LedgerIncompleteError(name) from None

    def value(self, name: str) -> Optional[float]:
        return self.get(name).value

    def put(self, entry: LedgerEntry) -> LedgerEntry:
        self._entries[entry.name] = entry
        return entry

    def set_exact(self, name: str, value: float, ref: str, depends_on: Sequence[str] = ()) -> LedgerEntry:
        return self.put(LedgerEntry(name, float(value), Provenance.EXACT, ref, tuple(depends_on)))

    def set_measured(self, name: str, value: float, ref: str, note: str = "") -> LedgerEntry:
        return self.put(LedgerEntry(name, float(value), Provenance.MEASURED, ref, note=note))

    def set_abstract(self, name: str, ref: str, value: Optional[float] = None, note: str = "") -> LedgerEntry:
        v = None if value is None else float(value)
        symbolic = None if v is not None else name
        return self.put(LedgerEntry(name, v, Provenance.ABSTRACT, ref, symbolic=symbolic, note=note))

    def derive(
        self,
        name: str,
        ref: str,
        inputs: Sequence[str],
        fn: Callable[..., float],
        symbolic: str,
        note: str = "",
    ) -> LedgerEntry:
        deps = [self.get(i) for i in inputs]
        if all(d.numeric for d in deps):
            prov = Provenance.MEASURED if any(d.provenance is Provenance.MEASURED for d in deps) else Provenance.EXACT
            return self.put(LedgerEntry(name, float(fn(*[d.value for d in deps])), prov, ref, tuple(inputs), note=note))
        missing = ", ".join(d.name for d in deps if not d.numeric)
        log.debug("%s stays symbolic: no value for %s", name, missing)
        return self.put(LedgerEntry(name, None, Provenance.ABSTRACT, ref, tuple(inputs), symbolic=symbolic, note=note))

    def apply_overrides(self, overrides: Mapping[str, object]) -> None:
        """{name: number | null | {"value": .., "provenance": ..}} replaces entries."""
        for name, spec in overrides.items():
            ref = self._entries[name].formula_ref if name in self._entries else "override"
            if spec is None:
                self.set_abstract(name, ref)
            elif isinstance(spec, (int, float)):
                self.put(LedgerEntry(name, float(spec), Provenance.ABSTRACT, ref, note="override"))
            elif isinstance(spec, Mapping):
                prov = Provenance(spec.get("provenance", Provenance.ABSTRACT.value))
                val = spec.get("value")
                self.put(LedgerEntry(name, None if val is None else float(val), prov, ref,
                                     symbolic=None if val is not None else name, note="override"))
            else:
                raise InvalidInputError(f"cannot interpret ledger override for {name!r}: {spec!r}")

    def to_dict(self) -> dict:
        return {name: e.to_dict() for name, e in sorted(self._entries.items())}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_dot(self) -> str:
        lines = ["digraph ledger {", "  rankdir=LR;"]
        for name, e in sorted(self._entries.items()):
            shown = f"{e.value:.6g}" if e.numeric else (e.symbolic or "?")
            shown = shown.replace('"', "'")
            lines.append(f'  "{name}" [label="{name}\\n{shown}\\n{e.provenance.value}"];')
        for name, e in sorted(self._entries.items()):
            for dep in e.depends_on:
                lines.append(f'  "{dep}" -> "{name}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------- Counting and reduction to two particles ----------

def c_n(n: int) -> float:
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n}")
    return math.comb(n, 2) * 0.75 ** (n - 2)


def c_n_exact(n: int) -> Fraction:
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n}")
    return math.comb(n, 2) * Fraction(3, 4) ** (n - 2)


def two_in_quadrant_weight(n: int) -> Fraction:
    """
    Σ over the four quadrants of P(exactly two of n uniform points fall in it), times the
    factor 4 of rescaling a quadrant to the full square. Brute force over assignments for n ≤ 8.
    """
    if n < 2:
        raise InvalidInputError(f"n must be >= 2, got {n}")
    if n <= 8:
        hits = sum(
            sum(1 for q in range(4) if assignment.count(q) == 2)
            for assignment in itertools.product(range(4), repeat=n)
        )
        return 4 * Fraction(hits, 4**n)
    p_two = math.comb(n, 2) * Fraction(1, 16) * Fraction(3, 4) ** (n - 2)
    return 16 * p_two


def reduction_to_two(n: int, e2_value: float, epsilon: float = 0.5) -> float:
    """π²C_n(1−ε)E₂ / (π² + E₂[C_n(1−ε) + 16(1/ε − 1)])."""
    if e2_value < 0:
        raise InvalidInputError(f"E2 must be >= 0, got {e2_value}")
    if not 0 < epsilon < 1:
        raise InvalidInputError(f"epsilon must lie in (0, 1), got {epsilon}")
    cn = c_n(n)
    pi2 = math.pi**2
    return pi2 * cn * (1 - epsilon) * e2_value / (pi2 + e2_value * (cn * (1 - epsilon) + 16 * (1 / epsilon - 1)))


def reduction_constants() -> Tuple[float, float]:
    """(C₁, C₂) with reduction_to_two(n, E₂, 1/2) ≥ C_n E₂/(C₁ + C₂C_n) whenever E₂ ≤ 8."""
    pi2 = math.pi**2
    return 2.0 + 256.0 / pi2, 8.0 / pi2


# ---------- Box bounds ----------

def k_alpha(alpha: float) -> float:
    """K_α = x I₀(x)/I₁(x) at x = √(2α); the α → 0 limit 2 is returned at α = 0."""
    if not 0 <= alpha <= 2:
        raise InvalidInputError(f"alpha must lie in [0, 2], got {alpha}")
    if alpha == 0:
        log.debug("k_alpha(0): returning the limit value 2")
        return 2.0
    x = math.sqrt(2.0 * alpha)
    return x * bessel_i(0, x) / bessel_i(1, x)


def medium_box_bound(alpha: float, gamma: float, n: int) -> float:
    if not 0 <= alpha <= 2:
        raise InvalidInputError(f"alpha must lie in [0, 2], got {alpha}")
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    pairs = max(n - 1, 0)
    if alpha == 0 or pairs == 0:
        return 0.0
    if gamma >= math.sqrt(2.0):
        return 2.0 * alpha / gamma**2 * n * pairs
    K = k_alpha(alpha)
    top = alpha * min(1.0 / (1.0 - gamma**2 / 2.0), K / 2.0)
    return top / (K + 2.0 * alpha * (-math.log(gamma / math.sqrt(2.0)))) * pairs


def small_box_bound(n: int, underline_n: float) -> float:
    """(n − N̲)₊ per unit square: half the sum of one-body levels above Λ = 2."""
    return max(n - underline_n, 0.0)


def gauge_corridor_constants(c: float, gamma: float) -> Tuple[float, float]:
    """(C₁, corridor floor) = ((1 − c)/2, c/(4√γ) − √γ)."""
    if not 0 < c < 1:
        raise InvalidInputError(f"c must lie in (0, 1), got {c}")
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    return 0.5 * (1.0 - c), c / (4.0 * math.sqrt(gamma)) - math.sqrt(gamma)


def large_box_bound(alpha: float, gamma: float, n: int, c_inner: float = 1.0, corridor_c: float = 0.5) -> float:
    """Unit-square bound reduction_to_two(n, C₁·E₂ floor at ratio 2γ)."""
    C1, _ = gauge_corridor_constants(corridor_c, gamma)
    return reduction_to_two(n, C1 * e2_lower_constant(alpha, 2.0 * gamma, c_inner))


def corridor_area(L, R) -> Fraction:
    """|Ω| = 8LR − 16R² for the corridor [0,L]² minus [2R, L−2R]², in exact arithmetic."""
    L, R = Fraction(L), Fraction(R)
    if not (L > 0 and 0 <= R <= L / 4):
        raise InvalidInputError(f"need L > 0 and 0 <= R <= L/4, got L={L}, R={R}")
    inner = L - 4 * R
    return L * L - inner * inner


@dataclass(frozen=True)
class BoxRegime:
    gamma: float
    regime: str
    thresholds: Tuple[float, float]


def box_regime(gamma: float, c1: float, c2: float) -> BoxRegime:
    if not c1 < c2:
        raise InvalidInputError(f"need c1 < c2, got {c1}, {c2}")
    if gamma < c1:
        regime = "large"
    elif gamma <= c2:
        regime = "medium"
    else:
        regime = "small"
    return BoxRegime(gamma=gamma, regime=regime, thresholds=(c1, c2))


def box_bound(regime: BoxRegime, alpha: float, n: int, *, underline_n: float = 0.0,
              c_inner: float = 1.0, corridor_c: float = 0.5) -> float:
    if regime.regime == "large":
        return large_box_bound(alpha, regime.gamma, n, c_inner, corridor_c) if n >= 2 else 0.0
    if regime.regime == "medium":
        return medium_box_bound(alpha, regime.gamma, n)
    return small_box_bound(n, underline_n)


# ---------- Finite-N reduction ----------

_discrepancy_logged = False


def _base_level(base_values: Mapping[int, float]) -> int:
    top = max(base_values)
    k = round(math.log(top, 4))
    if k < 1 or 4**k != top or set(base_values) != set(range(4 ** (k - 1) + 1, 4**k + 1)):
        raise InvalidInputError(f"base values must cover 4^(k-1)+1 .. 4^k exactly, got keys {sorted(base_values)}")
    return k


def finite_n_trace(base_values: Mapping[int, float], N: int) -> List[Tuple[int, int, float]]:
    """(l, 4^l, lower bound on E over (4^{l−1}, 4^l]) from e_l ≥ 4 e_{l−1}."""
    k = _base_level(base_values)
    e = min(base_values.values())
    trace = [(k, 4**k, e)]
    level = k
    while 4**level < N:
        level += 1
        e = 4.0 * e
        trace.append((level, 4**level, e))
    return trace


def finite_n_reduction(base_values: Mapping[int, float], N: int) -> float:
    """C_k·N·min(base) with C_k = 4^{−k}."""
    global _discrepancy_logged
    if not base_values:
        raise InvalidInputError("base values are empty")
    if any(v <= 0 for v in base_values.values()):
        raise PreconditionError("every base value must be positive")
    k = _base_level(base_values)
    if N < 4**k:
        raise InvalidInputError(f"N must be >= 4^k = {4**k}, got {N}")
    if not _discrepancy_logged:
        log.info("finite-N base range read as E(4^(k-1)+1)..E(4^k); the proof's E(4^(k-1))+1 differs")
        _discrepancy_logged = True
    log.debug("finite-N trace: %s", finite_n_trace(base_values, N))
    return 0.25**k * N * min(base_values.values())


# ---------- Global assembly ----------

def fn_constant_floor(c_le: float, c2: float, n_lower: float, n_upper: float) -> float:
    return c2 * c_le * n_lower / (n_upper**2 * (1.0 + 2.0 * c_le))


def assemble_global(ledger: ConstantLedger) -> ConstantLedger:
    """ε, C^FN and C^EA from C^LE, C₂, N_<, N_>, b₂ and α."""
    out = ledger.copy()
    for name in ("C_LE", "C_2", "N_lower", "N_upper", "b_2", "alpha"):
        out.get(name)
    out.derive("abs_alpha_minus_1", "|α − 1|", ["alpha"], lambda a: abs(a - 1.0), "|α−1|")

    eps = out.derive(
        "epsilon", "ε = C^LE|α−1|N_</(N_> + C^LE|α−1|N_>)",
        ["C_LE", "abs_alpha_minus_1", "N_lower", "N_upper"],
        lambda c, a, lo, hi: c * a * lo / (hi + c * a * hi),
        "C^LE|α−1|N_</(N_> + C^LE|α−1|N_>)",
    )
    if eps.numeric and not eps.value < 1:
        raise PreconditionError(f"epsilon = {eps.value} is not below 1")
    out.derive(
        "C_FN", "C^FN = (C₂/N_>)·C^LE N_</(N_> + C^LE|α−1|N_>)",
        ["C_2", "C_LE", "abs_alpha_minus_1", "N_lower", "N_upper"],
        lambda c2, c, a, lo, hi: c2 / hi * c * lo / (hi + c * a * hi),
        "(C₂/N_>)·C^LE N_</(N_> + C^LE|α−1|N_>)",
    )
    out.derive(
        "C_FN_floor", "C₂C^LE N_</(N_>²(1 + 2C^LE)) ≤ C^FN",
        ["C_LE", "C_2", "N_lower", "N_upper"],
        fn_constant_floor,
        "C₂C^LE N_</(N_>²(1 + 2C^LE))",
    )
    out.derive(
        "C_EA", "C^EA = min{C^FN/b₂, 1/(C₂N_<)}",
        ["C_FN", "b_2", "C_2", "N_lower"],
        lambda fn, b2, c2, lo: min(fn / b2, 1.0 / (c2 * lo)),
        "min{C^FN/b₂, 1/(C₂N_<)}",
    )
    return out


def local_exclusion_constant(ledger: ConstantLedger) -> LedgerEntry:
    """
    C^LE = min over N_< ≤ n ≤ N_> of the box bound for the regime of γ, divided by |α − 1|.
    The bound is vacuous at α = 1, where C^LE is recorded as 0.
    """
    regime_inputs = ["alpha", "gamma", "c_1", "c_2", "N_lower", "N_upper", "c_inner", "corridor_c"]
    gamma = ledger.value("gamma")
    c1, c2 = ledger.value("c_1"), ledger.value("c_2")
    regime = box_regime(gamma, c1, c2) if None not in (gamma, c1, c2) else None
    inputs = regime_inputs + (["underline_N"] if regime is None or regime.regime == "small" else [])

    def compute(alpha, gamma, c1, c2, lo, hi, c_inner, corridor_c, underline_n=0.0):
        reg = box_regime(gamma, c1, c2)
        if alpha == 1.0:
            return 0.0
        bounds = [
            box_bound(reg, alpha, n, underline_n=underline_n, c_inner=c_inner, corridor_c=corridor_c)
            for n in range(int(math.ceil(lo)), int(math.floor(hi)) + 1)
        ]
        return min(bounds) / abs(alpha - 1.0)

    ref = f"box bounds ({regime.regime if regime else '?'} regime) / |α−1|"
    return ledger.derive("C_LE", ref, inputs, compute, "min_n E_n(box)/|α−1|")


def default_ledger(
    alpha: float,
    gamma: float,
    n_lower: float = 4,
    n_upper: float = 16,
    *,
    c1: float = 1.0 / 24.0,
    c2: float = 2.0,
    c_inner: float = 1.0,
    corridor_c: float = 0.5,
) -> ConstantLedger:
    """Inputs of the chain; C₂, b₂ and N̲ stay abstract until measured or overridden."""
    led = ConstantLedger()
    led.set_abstract("alpha", "statistics parameter", alpha)
    led.set_abstract("gamma", "box ratio R/L", gamma)
    led.set_abstract("N_lower", "particle-count window N_<", n_lower)
    led.set_abstract("N_upper", "particle-count window N_>", n_upper)
    led.set_abstract("c_1", "large/medium box threshold", c1)
    led.set_abstract("c_2", "medium/small box threshold", c2)
    led.set_abstract("c_inner", "order factor inside g²(c·α₂, 12γ)", c_inner)
    led.set_abstract("corridor_c", "corridor fraction c of the gauge-removal step", corridor_c)
    led.set_abstract("C_2", "local uncertainty constant C₂")
    led.set_abstract("b_2", "Besicovitch overlap constant b₂")
    led.set_abstract("underline_N", "level count N(Λ = 2) on small boxes")
    led.set_abstract("medium_floor", "continuity floor for small |α| on medium boxes",
                     note="infimum of continuous functions of α; never computed")
    C1, C2 = reduction_constants()
    led.set_exact("reduction_C1", C1, "2 + 256/π² (ε = 1/2, E₂ ≤ 8)")
    led.set_exact("reduction_C2", C2, "8/π² (ε = 1/2, E₂ ≤ 8)")
    if gamma > 0 and 0 < corridor_c < 1:
        g1, floor = gauge_corridor_constants(corridor_c, gamma)
        led.set_exact("gauge_C1", g1, "(1 − c)/2", ["corridor_c"])
        led.set_exact("corridor_floor", floor, "c/(4√γ) − √γ", ["corridor_c", "gamma"])
    led.set_exact("K_alpha", k_alpha(alpha), "√(2α)·I₀/I₁ at √(2α)", ["alpha"])
    return led


def with_measurements(ledger: ConstantLedger, measurements: Mapping[str, Tuple[float, str]]) -> ConstantLedger:
    out = ledger.copy()
    for name, (value, note) in measurements.items():
        ref = out.get(name).formula_ref if name in out else name
        out.set_measured(name, value, ref, note=note)
    return out
