"""Multiple zeta values: exact polylogarithm series, arbitrary-precision numerics,
and shuffle regularization of two-letter words into period-ring elements.

Word dictionary: the word of a composition (k1, ..., kl) is
x1 x0^(k1-1) x1 x0^(k2-1) ... x1 x0^(kl-1), first letter integrated innermost
(nearest the basepoint 0), so k1 governs the smallest summation index.

Two independent numeric routes are provided: `mzv_numeric` runs direct lattice
summation with Euler-Maclaurin acceleration of every level's tail, and
`mzv_numeric_holder` splits the iterated integral at 1/2 into a convolution of
geometrically convergent polylogarithm sums.  They share no series and no
acceleration machinery; agreement between them is the package's strongest
internal evidence.  `mzv_numeric_bruteforce` is a literal truncated lattice sum
with a rigorous tail bound, useful as a slow sanity check.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath as mp

from .errors import NumericBudgetError, PreconditionError
from .ncalg import Word, bernoulli_numbers
from .periodring import Composition, PeriodElem, check_composition, is_admissible

X0, X1 = "x0", "x1"
KZ_LETTERS = (X0, X1)


def word_of_composition(k: Iterable[int]) -> Word:
    k = check_composition(k)
    out: list[str] = []
    for part in k:
        out.append(X1)
        out.extend([X0] * (part - 1))
    return tuple(out)


def composition_of_word(w: Sequence[str]) -> Composition:
    if not w or w[0] != X1:
        raise PreconditionError(f"word {w} does not start with x1, has no composition")
    parts: list[int] = []
    for letter in w:
        if letter == X1:
            parts.append(1)
        elif letter == X0:
            parts[-1] += 1
        else:
            raise PreconditionError(f"letter {letter!r} outside the x0/x1 alphabet")
    return tuple(parts)


def is_admissible_word(w: Sequence[str]) -> bool:
    return bool(w) and w[0] == X1 and w[-1] == X0


def polylog_series(k: Iterable[int], M: int) -> list[Fraction]:
    """Coefficients c[0..M] of the multiple polylogarithm sum over index chains."""
    k = check_composition(k)
    if M < 1:
        raise PreconditionError("series order must be >= 1")
    coeffs = [Fraction(0)] * (M + 1)
    for n in range(1, M + 1):
        coeffs[n] = Fraction(1, n ** k[0])
    for kj in k[1:]:
        prefix = Fraction(0)
        nxt = [Fraction(0)] * (M + 1)
        for n in range(1, M + 1):
            nxt[n] = prefix / n ** kj
            prefix += coeffs[n]
        coeffs = nxt
    return coeffs


# ---------------------------------------------------------------------------
# Route 1: lattice summation with Euler-Maclaurin tail acceleration.
#
# Level sums S_j(m) = sum over chains n_1 < ... < n_j <= m are anchored exactly
# at m = M0 and continued by asymptotic expansions in the basis
# log(m)^a / m^i, computed level by level.  The expansion of level j-1,
# shifted from m to m-1 and multiplied by m^(-k_j), feeds the Euler-Maclaurin
# formula for level j.
# ---------------------------------------------------------------------------


class _Expansion:
    """Finite combination of basis functions log(x)^a / x^i with mpf coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[tuple[int, int], mp.mpf] | None = None):
        self.terms = terms or {}

    def add_term(self, i: int, a: int, c) -> None:
        key = (i, a)
        cur = self.terms.get(key)
        self.terms[key] = c if cur is None else cur + c

    def plus(self, other: "_Expansion") -> "_Expansion":
        out = _Expansion(dict(self.terms))
        for (i, a), c in other.terms.items():
            out.add_term(i, a, c)
        return out

    def scaled(self, c) -> "_Expansion":
        return _Expansion({key: v * c for key, v in self.terms.items()})

    def shift_power(self, k: int) -> "_Expansion":
        """Multiply by x^(-k)."""
        return _Expansion({(i + k, a): c for (i, a), c in self.terms.items()})

    def derivative(self) -> "_Expansion":
        out = _Expansion()
        for (i, a), c in self.terms.items():
            if a:
                out.add_term(i + 1, a - 1, c * a)
            out.add_term(i + 1, a, -c * i)
        return out

    def integral(self) -> "_Expansion":
        """Antiderivative, no constant; input must have no i = 0 terms."""
        out = _Expansion()
        for (i, a), c in self.terms.items():
            if i == 0:
                raise PreconditionError("cannot integrate a bare log power in this basis")
            if i == 1:
                out.add_term(0, a + 1, c / (a + 1))
            else:
                fall = mp.mpf(1)
                for t in range(a + 1):
                    fall = fall / (i - 1)
                    out.add_term(i - 1, a - t, -c * fall * _falling(a, t))
        return out

    def eval(self, x) -> mp.mpf:
        lx = mp.log(x)
        total = mp.mpf(0)
        for (i, a), c in self.terms.items():
            total += c * lx ** a / x ** i
        return total

    def pruned(self, x0, thresh) -> "_Expansion":
        """Drop terms negligible at every x >= x0 (i = 0 terms are always kept)."""
        lx = mp.log(x0)
        out = {}
        for (i, a), c in self.terms.items():
            if i == 0 or abs(c) * lx ** a / x0 ** i > thresh:
                out[(i, a)] = c
        return _Expansion(out)


def _falling(a: int, t: int) -> int:
    out = 1
    for s in range(t):
        out *= a - s
    return out


def _shift_argument(exp: _Expansion, depth: int) -> _Expansion:
    """Rewrite f(x-1) in the same basis at x, truncating the 1/x tail at `depth`."""
    # u-series: (1-u)^(-i) and powers of P = -log(1-u) = sum u^t/t, u = 1/x.
    log_pows: list[list[mp.mpf]] = [[mp.mpf(1)] + [mp.mpf(0)] * depth]
    P = [mp.mpf(0)] + [mp.mpf(1) / t for t in range(1, depth + 1)]
    amax = max((a for (_, a) in exp.terms), default=0)
    for _ in range(amax):
        prev = log_pows[-1]
        nxt = [mp.mpf(0)] * (depth + 1)
        for s in range(depth + 1):
            if prev[s]:
                for t in range(1, depth + 1 - s):
                    nxt[s + t] += prev[s] * P[t]
        log_pows.append(nxt)
    out = _Expansion()
    for (i, a), c in exp.terms.items():
        # (x-1)^(-i) = x^(-i) sum_t C(i-1+t, t) x^(-t)
        geom = [mp.mpf(math.comb(i - 1 + t, t)) for t in range(depth + 1)] if i else None
        # log(x-1)^a = sum_b C(a,b) (-P)^b log(x)^(a-b)
        for b in range(a + 1):
            pb = log_pows[b]
            sign = (-1) ** b
            binom = math.comb(a, b)
            for s in range(depth + 1):
                if not pb[s]:
                    continue
                base = c * sign * binom * pb[s]
                if geom is None:
                    out.add_term(s, a - b, base)
                else:
                    for t in range(depth + 1 - s):
                        out.add_term(i + s + t, a - b, base * geom[t])
    return out


_BERN_CACHE: list[Fraction] = []


def _bern(n: int) -> Fraction:
    global _BERN_CACHE
    if n >= len(_BERN_CACHE):
        _BERN_CACHE = bernoulli_numbers(max(n, 2 * len(_BERN_CACHE) + 16))
    return _BERN_CACHE[n]


def _em_asymptotic(f: _Expansion, M0: int, thresh) -> _Expansion:
    """The m-dependent part of sum_{n<=m} f(n): antiderivative + f/2 + Bernoulli tail."""
    G = f.integral().plus(f.scaled(mp.mpf(1) / 2))
    deriv = f
    r = 1
    while True:
        deriv = deriv.derivative().derivative() if r > 1 else deriv.derivative()
        coeff = mp.mpf(_bern(2 * r).numerator) / _bern(2 * r).denominator / math.factorial(2 * r)
        term = deriv.scaled(coeff)
        mag = sum(abs(c) * mp.log(M0) ** a / mp.mpf(M0) ** i for (i, a), c in term.terms.items())
        if mag < thresh:
            break
        G = G.plus(term)
        r += 1
        if r > 300:
            raise NumericBudgetError("Euler-Maclaurin order exploded; raise the anchor point")
    return G


def _mzv_em(k: Composition, dps: int) -> mp.mpf:
    with mp.workdps(dps):
        M0 = 4000
        thresh = mp.mpf(10) ** (-(dps + 8))
        depth_u = max(8, int((dps + 12) / mp.log10(M0)) + 6)
        # exact anchor pass: running level sums S_j(n) for n = 1..M0
        S = [mp.mpf(0)] * (len(k) + 1)
        S[0] = mp.mpf(1)
        for n in range(1, M0 + 1):
            nn = mp.mpf(n)
            for j in range(len(k), 0, -1):
                S[j] += S[j - 1] / nn ** k[j - 1]
        C_prev = None
        G_prev = None
        for j, kj in enumerate(k, start=1):
            if j == 1:
                H = _Expansion({(kj, 0): mp.mpf(1)})
            else:
                inner = _shift_argument(G_prev, depth_u).pruned(M0, thresh)
                inner.add_term(0, 0, C_prev)
                H = inner.shift_power(kj)
            G = _em_asymptotic(H, M0, thresh).pruned(M0, thresh)
            C = S[j] - G.eval(M0)
            C_prev, G_prev = C, G
        for (i, a), c in G_prev.terms.items():
            if i == 0 and abs(c) > mp.mpf(10) ** (-(dps - 2)):
                raise NumericBudgetError(f"divergent residual {c} in level expansion: not admissible?")
        return C_prev


_MZV_CACHE: dict[Composition, tuple[int, mp.mpf]] = {}


def mzv_numeric(k: Iterable[int], precision: int) -> mp.mpf:
    """Zeta value of an admissible composition, |error| < 10^(-precision)."""
    k = check_composition(k)
    if not is_admissible(k):
        raise PreconditionError(f"composition {k} is not admissible (last part must be >= 2)")
    dps = precision + 12
    hit = _MZV_CACHE.get(k)
    if hit is not None and hit[0] >= dps:
        return hit[1]
    value = _mzv_em(k, dps)
    _MZV_CACHE[k] = (dps, value)
    return value


# ---------------------------------------------------------------------------
# Route 2: Hoelder convolution at 1/2.
#
# Splitting the iterated-integral simplex at 1/2 writes zeta(w) as
# sum over w = u.v of Li(u)(1/2) * Li(sigma(reverse(v)))(1/2) where sigma swaps
# x0 and x1; every factor is a polylogarithm chain sum at z = 1/2 with a
# geometric tail.
# ---------------------------------------------------------------------------


def _chain_sum_at_half(k: Composition, dps: int, eps) -> mp.mpf:
    with mp.workdps(dps):
        depth = len(k)
        M = 16
        while True:
            M *= 2
            tail = mp.mpf(M + 1) ** (depth - 1) * mp.mpf(2) ** (-(M + 1)) * 2
            if tail < eps:
                break
            if M > 1 << 22:
                raise NumericBudgetError("polylog chain sum cannot reach the requested precision")
        level = [mp.mpf(0)] * (M + 1)
        for n in range(1, M + 1):
            level[n] = mp.mpf(n) ** (-k[0])
        for kj in k[1:]:
            prefix = mp.mpf(0)
            nxt = [mp.mpf(0)] * (M + 1)
            for n in range(1, M + 1):
                nxt[n] = prefix / mp.mpf(n) ** kj
                prefix += level[n]
            level = nxt
        half = mp.mpf(1) / 2
        total = mp.mpf(0)
        for n in range(M, 0, -1):
            total += level[n] * half ** n
        return total


def _swap_reverse(w: Word) -> Word:
    flip = {X0: X1, X1: X0}
    return tuple(flip[l] for l in reversed(w))


def mzv_numeric_holder(k: Iterable[int], precision: int) -> mp.mpf:
    """Independent zeta evaluation by convolution of polylogarithm sums at 1/2."""
    k = check_composition(k)
    if not is_admissible(k):
        raise PreconditionError(f"composition {k} is not admissible (last part must be >= 2)")
    w = word_of_composition(k)
    n = len(w)
    dps = precision + 12
    with mp.workdps(dps):
        eps = mp.mpf(10) ** (-(precision + 8)) / (n + 1)
        total = mp.mpf(0)
        for j in range(n + 1):
            u, v = w[:j], w[j:]
            left = _chain_sum_at_half(composition_of_word(u), dps, eps) if u else mp.mpf(1)
            rv = _swap_reverse(v)
            right = _chain_sum_at_half(composition_of_word(rv), dps, eps) if v else mp.mpf(1)
            total += left * right
        return total


def mzv_numeric_bruteforce(k: Iterable[int], M: int, dps: int = 30) -> tuple[mp.mpf, mp.mpf]:
    """Literal truncated lattice sum with a rigorous tail bound.

    Bound: chains below the top index contribute at most prod_i H-type factors
    <= (1 + log M)^(l-1), so the tail is below
    2 (1 + log M)^(l-1) M^(1-k_l) / (k_l - 1) once M >= exp(2(l-1)/(k_l-1)).
    """
    k = check_composition(k)
    if not is_admissible(k):
        raise PreconditionError(f"composition {k} is not admissible (last part must be >= 2)")
    l = len(k)
    with mp.workdps(dps):
        if M < math.exp(2 * (l - 1) / (k[-1] - 1)) or M < 100:
            raise NumericBudgetError("truncation too small for the tail bound to hold")
        level = [mp.mpf(0)] * (M + 1)
        for n in range(1, M + 1):
            level[n] = mp.mpf(n) ** (-k[0])
        for kj in k[1:]:
            prefix = mp.mpf(0)
            nxt = [mp.mpf(0)] * (M + 1)
            for n in range(1, M + 1):
                nxt[n] = prefix / mp.mpf(n) ** kj
                prefix += level[n]
            level = nxt
        value = mp.fsum(level)
        bound = 2 * (1 + mp.log(M)) ** (l - 1) * mp.mpf(M) ** (1 - k[-1]) / (k[-1] - 1)
        return value, bound


def polylog_numeric(k: Iterable[int], z, precision: int) -> mp.mpc:
    """Multiple polylogarithm chain sum at |z| < 1 with a certified geometric tail."""
    k = check_composition(k)
    dps = precision + 12
    with mp.workdps(dps):
        z = mp.mpc(z)
        r = abs(z)
        if r >= mp.mpf(3) / 4:
            raise NumericBudgetError(f"|z| = {mp.nstr(r, 8)} too close to 1 for the chain sum")
        depth = len(k)
        eps = mp.mpf(10) ** (-(precision + 6))
        M = 16
        while True:
            M *= 2
            tail = mp.mpf(M + 1) ** (depth - 1) * r ** (M + 1) / (1 - r) ** depth * 2
            if tail < eps:
                break
            if M > 1 << 22:
                raise NumericBudgetError("polylog chain sum cannot reach the requested precision")
        level = [mp.mpc(0)] * (M + 1)
        for n in range(1, M + 1):
            level[n] = mp.mpf(n) ** (-k[0])
        for kj in k[1:]:
            prefix = mp.mpc(0)
            nxt = [mp.mpc(0)] * (M + 1)
            for n in range(1, M + 1):
                nxt[n] = prefix / mp.mpf(n) ** kj
                prefix += level[n]
            level = nxt
        total = mp.mpc(0)
        for n in range(M, 0, -1):
            total = total * z + level[n]
        return total * z


# ---------------------------------------------------------------------------
# Shuffle regularization with both endpoint constants set to 0.
# ---------------------------------------------------------------------------

_REG_CACHE: dict[Word, PeriodElem] = {}


def shuffle_regularize(w: Sequence[str]) -> PeriodElem:
    """Shuffle-regularized value of a two-letter word as a period-ring element.

    Admissible words map to their zeta symbol; the divergent letters x1 (at the
    far endpoint) and x0 (at the basepoint) regularize to 0, and every other
    word reduces through the shuffle algebra.
    """
    w = tuple(w)
    for letter in w:
        if letter not in KZ_LETTERS:
            raise PreconditionError(f"letter {letter!r} outside the x0/x1 alphabet")
    return _reg(w)


def _reg(w: Word) -> PeriodElem:
    hit = _REG_CACHE.get(w)
    if hit is not None:
        return hit
    if not w:
        out = PeriodElem.one()
    elif is_admissible_word(w):
        out = PeriodElem.zeta(composition_of_word(w))
    elif w[-1] == X1:
        b = 0
        while b < len(w) and w[-1 - b] == X1:
            b += 1
        v = w[: len(w) - b]
        if not v:
            out = PeriodElem.zero()
        else:
            acc = PeriodElem.zero()
            tail = (X1,) * (b - 1)
            for j in range(len(v)):
                acc = acc + _reg(v[:j] + (X1,) + v[j:] + tail)
            out = acc * Fraction(-1, b)
    else:
        a = 0
        while a < len(w) and w[a] == X0:
            a += 1
        v = w[a:]
        if not v:
            out = PeriodElem.zero()
        else:
            acc = PeriodElem.zero()
            head = (X0,) * (a - 1)
            for q in range(1, len(v) + 1):
                acc = acc + _reg(head + v[:q] + (X0,) + v[q:])
            out = acc * Fraction(-1, a)
    _REG_CACHE[w] = out
    return out
