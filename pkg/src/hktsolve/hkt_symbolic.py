"""Symbolic reduction of the quaternionic Monge-Ampere ratio.

Scalars here are polynomials over Q(i) in jet symbols of one real basic
potential: first derivatives along the two transverse frame directions
and their conjugates, plus the two mixed second derivatives.  Forms are
exterior polynomials in the coframe with such polynomials as
coefficients.  Everything is exact.

Jet symbols:

* ``('g', i)``  is the derivative of the potential along frame direction
  i (bars addressed as ``i + 2n``),
* ``('h', i, j)`` with i <= j is a canonical second derivative, first
  along i, then j.

Derivatives along annihilated directions are rewritten through the
bracket before a symbol is ever created, so polynomials only mention
transverse jets.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadAnnihilatedSet,
    ConfigError,
    NonBasicResidue,
    NotPerfectSquareDecomposition,
    OrderOverflow,
)
from .exact import ONE, QQi, ZERO, as_qqi
from .lie_frame import check_foliation


class ReductionContext:
    """A bracket table plus a choice of annihilated frame indices."""

    def __init__(self, table, split):
        self.table = table
        self.half = table.half
        self.split = tuple(sorted(split))
        self.active = tuple(k for k in range(1, self.half + 1) if k not in self.split)

    def is_active(self, i):
        k = i - self.half if i > self.half else i
        return k not in self.split

    def toggle(self, i):
        return i - self.half if i > self.half else i + self.half


# ---------------------------------------------------------------------------
# jet polynomials: dict {monomial: QQi}, monomial a sorted tuple of symbols


def p_const(c):
    c = as_qqi(c)
    return {(): c} if c else {}


def p_sym(sym, c=ONE):
    c = as_qqi(c)
    return {(sym,): c} if c else {}


def p_add(a, b):
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, ZERO) + c
        if s:
            out[m] = s
        else:
            out.pop(m, None)
    return out


def p_scale(a, c):
    c = as_qqi(c)
    if not c:
        return {}
    return {m: x * c for m, x in a.items()}


def p_mul(a, b):
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(sorted(ma + mb))
            s = out.get(m, ZERO) + ca * cb
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def p_eval(poly, assignment):
    total = 0j
    for mono, c in poly.items():
        val = c.to_complex()
        for sym in mono:
            try:
                val *= assignment[sym]
            except KeyError:
                raise ConfigError("assignment is missing jet symbol %r" % (sym,))
        total += val
    return total


def jet_symbols(poly):
    out = set()
    for mono in poly:
        out.update(mono)
    return out


def _bracket_jet(i, j, ctx):
    """[Z_i, Z_j] applied to the potential, annihilated components dropped."""
    out = {}
    for k, c in ctx.table.bracket(i, j).items():
        if ctx.is_active(k):
            out = p_add(out, p_sym(("g", k), c))
    return out


def _deriv_sym(i, sym, ctx):
    """Z_i applied to one jet symbol, returned as a polynomial."""
    if sym[0] != "g":
        raise OrderOverflow(
            "third derivative of the potential requested via %r" % (sym,))
    j = sym[1]
    if not ctx.is_active(j):
        return {}
    if not ctx.is_active(i):
        # the first derivative of a basic function along the foliation
        # vanishes, only the bracket term survives
        return _bracket_jet(i, j, ctx)
    if i <= j:
        return p_sym(("h", i, j))
    return p_add(p_sym(("h", j, i)), _bracket_jet(i, j, ctx))


def p_deriv(i, poly, ctx):
    out = {}
    for mono, coef in poly.items():
        for pos in range(len(mono)):
            d = _deriv_sym(i, mono[pos], ctx)
            if not d:
                continue
            rest = mono[:pos] + mono[pos + 1:]
            out = p_add(out, p_mul({rest: coef}, d))
    return out


def _conj_sym(sym, ctx):
    tog = ctx.toggle
    if sym[0] == "g":
        return p_sym(("g", tog(sym[1])))
    _, i, j = sym
    ci, cj = tog(i), tog(j)
    if ci <= cj:
        return p_sym(("h", ci, cj))
    return p_add(p_sym(("h", cj, ci)), _bracket_jet(ci, cj, ctx))


def p_conj(poly, ctx):
    out = {}
    for mono, coef in poly.items():
        term = p_const(coef.conjugate())
        for sym in mono:
            term = p_mul(term, _conj_sym(sym, ctx))
        out = p_add(out, term)
    return out


def sym_str(sym, half):
    def idx(i):
        return "%d'" % (i - half) if i > half else "%d" % i

    if sym[0] == "g":
        return "g%s" % idx(sym[1])
    return "h(%s,%s)" % (idx(sym[1]), idx(sym[2]))


def poly_str(poly, half):
    if not poly:
        return "0"
    parts = []
    for mono in sorted(poly, key=lambda m: (len(m), m)):
        c = poly[mono]
        ms = "*".join(sym_str(s, half) for s in mono)
        if not mono:
            parts.append("(%s)" % c)
        elif c == ONE:
            parts.append(ms)
        else:
            parts.append("(%s)*%s" % (c, ms))
    return " + ".join(parts)


# ---------------------------------------------------------------------------
# forms


class Form:
    """Exterior polynomial: dict from sorted index tuples to jet polynomials."""

    __slots__ = ("half", "terms")

    def __init__(self, half, terms=None):
        self.half = half
        self.terms = {}
        if terms:
            for key, poly in terms.items():
                key = tuple(key)
                if any(key[i] >= key[i + 1] for i in range(len(key) - 1)):
                    raise ConfigError("form key %r is not strictly increasing" % (key,))
                if key and not (1 <= key[0] and key[-1] <= 2 * half):
                    raise ConfigError("form key %r out of range" % (key,))
                if poly:
                    self.terms[key] = dict(poly)

    def __eq__(self, other):
        return isinstance(other, Form) and self.half == other.half \
            and self.terms == other.terms

    def is_zero(self):
        return not self.terms


def form_add(a, b):
    out = Form(a.half)
    out.terms = dict(a.terms)
    for key, poly in b.terms.items():
        s = p_add(out.terms.get(key, {}), poly)
        if s:
            out.terms[key] = s
        else:
            out.terms.pop(key, None)
    return out


def form_scale(a, c):
    out = Form(a.half)
    for key, poly in a.terms.items():
        s = p_scale(poly, c)
        if s:
            out.terms[key] = s
    return out


def _merge_signed(t1, t2):
    """Merge two sorted disjoint index tuples; return (sign, merged)."""
    merged = []
    i = j = inv = 0
    while i < len(t1) and j < len(t2):
        if t1[i] < t2[j]:
            merged.append(t1[i])
            i += 1
        else:
            merged.append(t2[j])
            j += 1
            inv += len(t1) - i
    merged.extend(t1[i:])
    merged.extend(t2[j:])
    return (-1 if inv % 2 else 1), tuple(merged)


def wedge(a, b):
    if a.half != b.half:
        raise ConfigError("wedge of forms over different frames")
    out = Form(a.half)
    for k1, p1 in a.terms.items():
        s1 = set(k1)
        for k2, p2 in b.terms.items():
            if s1 & set(k2):
                continue
            sign, key = _merge_signed(k1, k2)
            term = p_mul(p1, p2)
            if sign < 0:
                term = p_scale(term, QQi(-1))
            s = p_add(out.terms.get(key, {}), term)
            if s:
                out.terms[key] = s
            else:
                out.terms.pop(key, None)
    return out


def gen_str(i, half):
    return "Z%d'" % (i - half) if i > half else "Z%d" % i


def canonical_str(obj, half=None, sep="; "):
    """Deterministic plain text rendering of a form or a polynomial."""
    if isinstance(obj, Form):
        if not obj.terms:
            return "0"
        lines = []
        for key in sorted(obj.terms):
            gens = "^".join(gen_str(i, obj.half) for i in key)
            lines.append("[%s] %s" % (gens, poly_str(obj.terms[key], obj.half)))
        return sep.join(lines)
    if half is None:
        raise ConfigError("half is required to render a bare polynomial")
    return poly_str(obj, half)


def standard_hkt_form(half):
    """The invariant (2,0)-form: the sum of Z^{2k-1} wedge Z^{2k}."""
    return Form(half, {(2 * k - 1, 2 * k): p_const(1) for k in range(1, half // 2 + 1)})


def del_generator(t, ctx):
    """The holomorphic exterior derivative of one coframe generator."""
    half = ctx.half
    table = ctx.table
    terms = {}
    if t <= half:
        for r in range(1, half + 1):
            for s in range(r + 1, half + 1):
                c = table.coeff(t, r, s)
                if c:
                    terms[(r, s)] = p_const(-c)
    else:
        for r in range(1, half + 1):
            for s in range(half + 1, 2 * half + 1):
                c = table.coeff(t, r, s)
                if c:
                    terms[(r, s)] = p_const(-c)
    return Form(half, terms)


def del_holo(form, ctx):
    """Holomorphic exterior derivative of a form with jet coefficients."""
    half = ctx.half
    out = Form(half)
    for key, poly in form.terms.items():
        # the coefficient varies: differentiate along every unbarred direction
        for r in range(1, half + 1):
            if r in key:
                continue
            dp = p_deriv(r, poly, ctx)
            if not dp:
                continue
            below = sum(1 for k in key if k < r)
            if below % 2:
                dp = p_scale(dp, QQi(-1))
            merged = tuple(sorted(key + (r,)))
            s = p_add(out.terms.get(merged, {}), dp)
            if s:
                out.terms[merged] = s
            else:
                out.terms.pop(merged, None)
        # the generators are not closed: Leibniz over the wedge factors
        for pos, t in enumerate(key):
            dgen = del_generator(t, ctx)
            if dgen.is_zero():
                continue
            rest = key[:pos] + key[pos + 1:]
            restset = set(rest)
            for gkey, gpoly in dgen.terms.items():
                if restset & set(gkey):
                    continue
                sign, merged = _merge_signed(gkey, rest)
                if pos % 2:
                    sign = -sign
                term = p_mul(poly, gpoly)
                if sign < 0:
                    term = p_scale(term, QQi(-1))
                s = p_add(out.terms.get(merged, {}), term)
                if s:
                    out.terms[merged] = s
                else:
                    out.terms.pop(merged, None)
    return out


def del_j_basic(ctx):
    """The J-twisted derivative of the basic potential.

    For a basic function only the transverse pair (a, b) survives and the
    operator takes the pinned first-order form
    ``(Z_a' phi) Z^b - (Z_b' phi) Z^a``.
    """
    if len(ctx.active) != 2:
        raise BadAnnihilatedSet(
            "need exactly one transverse J-pair, got %r" % (ctx.active,))
    a, b = ctx.active
    if b != a + 1 or a % 2 != 1:
        raise BadAnnihilatedSet("transverse indices %r are not a J-pair" % (ctx.active,))
    half = ctx.half
    return Form(half, {
        (b,): p_sym(("g", a + half)),
        (a,): p_sym(("g", b + half), QQi(-1)),
    })


def form_component(form, i, j):
    """Signed coefficient polynomial of a 2-form evaluated on (Z_i, Z_j)."""
    if i == j:
        return {}
    key = (i, j) if i < j else (j, i)
    poly = form.terms.get(key, {})
    if i > j:
        poly = p_scale(poly, QQi(-1))
    return poly


# ---------------------------------------------------------------------------
# the J-map on the coframe, conjugation, and the reality check


def _jmap_index(i, half):
    """Contragredient action of J on one coframe index: (sign, new index)."""
    barred = i > half
    k = i - half if barred else i
    if k % 2 == 1:
        sign, partner = -1, k + 1
    else:
        sign, partner = 1, k - 1
    # J swaps barred and unbarred sides
    new = partner if barred else partner + half
    return sign, new


def jmap_form(form):
    out = Form(form.half)
    for key, poly in form.terms.items():
        sign = 1
        imgs = []
        for i in key:
            s, j = _jmap_index(i, form.half)
            sign *= s
            imgs.append(j)
        # sort the image indices, tracking parity
        perm = sorted(range(len(imgs)), key=lambda p: imgs[p])
        inv = sum(1 for x in range(len(perm)) for y in range(x + 1, len(perm))
                  if perm[x] > perm[y])
        if inv % 2:
            sign = -sign
        newkey = tuple(sorted(imgs))
        term = p_scale(poly, QQi(sign))
        s = p_add(out.terms.get(newkey, {}), term)
        if s:
            out.terms[newkey] = s
        else:
            out.terms.pop(newkey, None)
    return out


def conj_form(form, ctx):
    out = Form(form.half)
    for key, poly in form.terms.items():
        imgs = [ctx.toggle(i) for i in key]
        perm = sorted(range(len(imgs)), key=lambda p: imgs[p])
        inv = sum(1 for x in range(len(perm)) for y in range(x + 1, len(perm))
                  if perm[x] > perm[y])
        term = p_conj(poly, ctx)
        if inv % 2:
            term = p_scale(term, QQi(-1))
        newkey = tuple(sorted(imgs))
        s = p_add(out.terms.get(newkey, {}), term)
        if s:
            out.terms[newkey] = s
        else:
            out.terms.pop(newkey, None)
    return out


def form_max_abs(form):
    worst = 0.0
    for poly in form.terms.values():
        for c in poly.values():
            worst = max(worst, abs(c.to_complex()))
    return worst


def reality_check(form, ctx, exact=True, tol=1e-12):
    """Does J map the form to its conjugate?

    This is the reality condition for (2,0)-forms in the quaternionic
    sense.  With ``exact`` the comparison is literal; otherwise the
    largest deviating coefficient must stay below ``tol``.
    """
    diff = form_add(jmap_form(form), form_scale(conj_form(form, ctx), QQi(-1)))
    if exact:
        return diff.is_zero()
    return form_max_abs(diff) <= tol


# ---------------------------------------------------------------------------
# the reduction itself


@dataclass
class ReducedOperator:
    """Normal form of the Monge-Ampere ratio for one basic potential.

    ratio = 1 + (second derivatives along the transverse pair)
              + (an exact quadratic in the transverse gradient).

    ``p_forms`` and ``q_forms`` hold, for every annihilated index k, the
    two linear gradient forms extracted from the mixed part of the
    operator; the quadratic part equals the pairwise combination
    ``sum over split pairs (k, k') of  Q_k P_k' - P_k Q_k'`` and, once
    the conjugation relations are used, ``- sum |P_k|^2``.
    """

    name: str
    half: int
    n: int
    active_pair: tuple
    split: tuple
    ratio_poly: dict
    p_forms: dict
    q_forms: dict
    quadratic_poly: dict

    def evaluate(self, assignment):
        """Value of the ratio polynomial at a jet assignment."""
        return p_eval(self.ratio_poly, assignment)

    def evaluate_normal_form(self, assignment):
        """1 + trace term - sum |P_k|^2, for conjugation-consistent jets."""
        a, b = self.active_pair
        total = 1.0 + 0j
        total += assignment[("h", a, a + self.half)]
        total += assignment[("h", b, b + self.half)]
        for k in self.split:
            pk = p_eval(self.p_forms[k], assignment)
            total -= pk * pk.conjugate()
        return total

    def gradient_rows(self):
        """Complex rows r_k with P_k = r_k . (v1, v2, v3, v4).

        The transverse gradient is modeled on flat coordinates through
        ``g_a = v1 - i v2`` and ``g_b = v3 - i v4``.
        """
        a, b = self.active_pair
        half = self.half
        basis = {
            ("g", a): np.array([1, -1j, 0, 0]),
            ("g", a + half): np.array([1, 1j, 0, 0]),
            ("g", b): np.array([0, 0, 1, -1j]),
            ("g", b + half): np.array([0, 0, 1, 1j]),
        }
        rows = {}
        for k, form in sorted(self.p_forms.items()):
            r = np.zeros(4, dtype=complex)
            for mono, c in form.items():
                r = r + c.to_complex() * basis[mono[0]]
            rows[k] = r
        return rows

    def real_quadratic_matrix(self):
        """The 4x4 real matrix Q with quadratic part = grad^T Q grad."""
        q = np.zeros((4, 4))
        for r in self.gradient_rows().values():
            q -= np.real(np.outer(r, np.conjugate(r)))
        return q

    def describe(self):
        half = self.half
        a, b = self.active_pair
        lines = [
            "transverse pair: (%d, %d); annihilated: %s" % (a, b, list(self.split)),
            "ratio = %s" % poly_str(self.ratio_poly, half),
        ]
        for k in self.split:
            lines.append("P_%d = %s" % (k, poly_str(self.p_forms[k], half)))
        for k in self.split:
            lines.append("Q_%d = %s" % (k, poly_str(self.q_forms[k], half)))
        return "\n".join(lines)


def quadratic_forms_closed(table, split):
    """P_k and Q_k straight from the bracket table (six-term formulas).

    This bypasses the exterior calculus entirely and serves as the
    independent cross-check for the extracted forms.
    """
    half = table.half
    split = tuple(sorted(split))
    active = [k for k in range(1, half + 1) if k not in split]
    if len(active) != 2:
        raise BadAnnihilatedSet("need exactly one transverse J-pair")
    a, b = active
    ab, bb = a + half, b + half

    def g(i, c):
        return p_sym(("g", i), c) if c else {}

    p_forms, q_forms = {}, {}
    for k in split:
        p = {}
        p = p_add(p, g(bb, table.coeff(a, a, k)))
        p = p_add(p, g(ab, -table.coeff(b, a, k)))
        p = p_add(p, g(a, table.coeff(a, k, bb)))
        p = p_add(p, g(ab, table.coeff(ab, k, bb)))
        p = p_add(p, g(b, table.coeff(b, k, bb)))
        p = p_add(p, g(bb, table.coeff(bb, k, bb)))
        q = {}
        q = p_add(q, g(ab, -table.coeff(b, b, k)))
        q = p_add(q, g(bb, table.coeff(a, b, k)))
        q = p_add(q, g(a, -table.coeff(a, k, ab)))
        q = p_add(q, g(ab, -table.coeff(ab, k, ab)))
        q = p_add(q, g(b, -table.coeff(b, k, ab)))
        q = p_add(q, g(bb, -table.coeff(bb, k, ab)))
        p_forms[k] = p
        q_forms[k] = q
    return p_forms, q_forms


def _require_basic(form, ctx):
    for poly in form.terms.values():
        for sym in jet_symbols(poly):
            for i in sym[1:]:
                if not ctx.is_active(i):
                    raise NonBasicResidue(
                        "jet %r along an annihilated direction survived" % (sym,))


def reduce_ratio(frame, split=None, check=True):
    """Expand the perturbed top power and normalize by the unperturbed one.

    Returns the ReducedOperator carrying the full ratio polynomial, the
    extracted gradient forms, and the verified normal form data.  Raises
    NotPerfectSquareDecomposition when the expansion does not collapse to
    the advertised shape.
    """
    ctx = ReductionContext(frame.table, frame.split if split is None else split)
    if check and not check_foliation(frame, ctx.split, strict=True):
        raise BadAnnihilatedSet("foliation check failed")
    half = ctx.half
    n = half // 2

    alpha = del_j_basic(ctx)
    dd = del_holo(alpha, ctx)
    _require_basic(dd, ctx)

    s = form_add(standard_hkt_form(half), dd)
    power = s
    for _ in range(n - 1):
        power = wedge(power, s)
    top = power.terms.get(tuple(range(1, half + 1)), {})
    ratio = p_scale(top, QQi(1) / math.factorial(n))

    a, b = ctx.active
    # classify the monomials of the ratio
    lap = {}
    quad = {}
    for mono, c in ratio.items():
        if mono == ():
            continue
        if len(mono) == 1 and mono[0][0] == "h":
            lap[mono[0]] = c
        elif len(mono) == 2 and mono[0][0] == "g" and mono[1][0] == "g":
            quad[mono] = c
        else:
            raise NotPerfectSquareDecomposition(
                "unexpected monomial %s in the ratio" % (mono,))
    if ratio.get((), ZERO) != ONE:
        raise NotPerfectSquareDecomposition("constant term of the ratio is not 1")
    want_lap = {("h", a, a + half): ONE, ("h", b, b + half): ONE}
    if lap != want_lap:
        raise NotPerfectSquareDecomposition(
            "second order part is not the transverse trace: %r" % (lap,))

    p_forms, q_forms = {}, {}
    for k in ctx.split:
        p_forms[k] = p_scale(form_component(dd, k, a), QQi(-1))
        q_forms[k] = p_scale(form_component(dd, k, b), QQi(-1))
        for poly in (p_forms[k], q_forms[k]):
            for mono in poly:
                if len(mono) != 1 or mono[0][0] != "g":
                    raise NotPerfectSquareDecomposition(
                        "gradient form at index %d is not linear" % k)

    candidate = {}
    for k in ctx.split:
        if k % 2 == 0:
            continue
        k2 = k + 1
        candidate = p_add(candidate, p_mul(q_forms[k], p_forms[k2]))
        candidate = p_add(candidate, p_scale(p_mul(p_forms[k], q_forms[k2]), QQi(-1)))
    if candidate != quad:
        raise NotPerfectSquareDecomposition(
            "quadratic part does not match the paired gradient forms")

    # conjugation relations that turn the pairing into minus a square sum
    for k in ctx.split:
        if k % 2 == 0:
            continue
        k2 = k + 1
        if q_forms[k] != p_scale(p_conj(p_forms[k2], ctx), QQi(-1)):
            raise NotPerfectSquareDecomposition(
                "conjugation relation fails at index %d" % k)
        if q_forms[k2] != p_conj(p_forms[k], ctx):
            raise NotPerfectSquareDecomposition(
                "conjugation relation fails at index %d" % k2)

    return ReducedOperator(
        name=getattr(frame.spec, "name", "?"),
        half=half,
        n=n,
        active_pair=(a, b),
        split=ctx.split,
        ratio_poly=ratio,
        p_forms=p_forms,
        q_forms=q_forms,
        quadratic_poly=quad,
    )


def random_jets(op, rng, realistic=True):
    """A random jet assignment for a reduced operator.

    With ``realistic`` the assignment satisfies the conjugation
    relations a genuine real potential would (conjugate gradients,
    real mixed traces); otherwise all six symbols are free.
    """
    a, b = op.active_pair
    half = op.half

    def z():
        return complex(rng.uniform(-1, 1), rng.uniform(-1, 1))

    ga, gb = z(), z()
    out = {("g", a): ga, ("g", b): gb}
    if realistic:
        out[("g", a + half)] = ga.conjugate()
        out[("g", b + half)] = gb.conjugate()
        out[("h", a, a + half)] = rng.uniform(-1, 1)
        out[("h", b, b + half)] = rng.uniform(-1, 1)
    else:
        out[("g", a + half)] = z()
        out[("g", b + half)] = z()
        out[("h", a, a + half)] = z()
        out[("h", b, b + half)] = z()
    return out
