"""Real Lie algebras, quaternionic frames, and their complex bracket tables.

The real algebra is given by structure constants on a basis X_1..X_N.  A
pair of anticommuting complex structures I, J (given as exact matrices)
turns R^N into a quaternionic vector space; a frame is a choice of N/2
complex vectors of type (1,0) for I that J pairs up two by two.  All
arithmetic is exact over Q(i).

Index conventions used throughout the package:

* real basis indices run 1..N,
* complex frame indices run 1..2n with N = 4n,
* a barred (conjugate) frame vector is addressed as ``2n + r``.

J pairs the frame vectors (2k-1, 2k).  Frames are normalized so that
``J Z_{2k-1} = -conj(Z_{2k})``; a frame handed in with the opposite sign
on some pair is repaired by flipping the second vector of that pair.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    BadAnnihilatedSet,
    ConfigError,
    DimensionMismatch,
    DimensionNotMultipleOf4,
    IndexOutOfRange,
    JacobiViolation,
    LinearlyDependent,
    LinearSolveFailure,
    NijenhuisViolation,
    NonClosedBracket,
    NotUnitary,
    PairingNotInvolutive,
)
from .exact import ONE, QQi, ZERO, as_qqi, mat_inv, mat_vec


# ---------------------------------------------------------------------------
# real structure constants


class StructureConstants:
    """Brackets [X_i, X_j] = sum_k c^k_ij X_k on a fixed basis, 1-based."""

    def __init__(self, dim, table):
        if dim < 1:
            raise ConfigError("dimension must be positive")
        self.dim = dim
        self.table = {}
        for (i, j), comps in table.items():
            self._check_index(i)
            self._check_index(j)
            if i == j:
                raise ConfigError("bracket of X_%d with itself listed" % i)
            sign = 1
            if i > j:
                i, j, sign = j, i, -1
            if (i, j) in self.table:
                raise ConfigError("bracket (%d, %d) listed twice" % (i, j))
            clean = {}
            for k, c in comps.items():
                self._check_index(k)
                c = Fraction(c) * sign
                if c != 0:
                    clean[k] = c
            if clean:
                self.table[(i, j)] = clean

    def _check_index(self, i):
        if not isinstance(i, int) or not (1 <= i <= self.dim):
            raise IndexOutOfRange("index %r outside 1..%d" % (i, self.dim))

    def bracket_basis(self, i, j):
        """[X_i, X_j] as a dict k -> Fraction."""
        if i == j:
            return {}
        if i < j:
            return dict(self.table.get((i, j), {}))
        return {k: -c for k, c in self.table.get((j, i), {}).items()}

    def bracket(self, u, v):
        """Bracket of two coefficient vectors (QQi lists of length dim)."""
        if len(u) != self.dim or len(v) != self.dim:
            raise DimensionMismatch("vectors must have length %d" % self.dim)
        out = [ZERO] * self.dim
        for (i, j), comps in self.table.items():
            coef = u[i - 1] * v[j - 1] - u[j - 1] * v[i - 1]
            if coef:
                for k, c in comps.items():
                    out[k - 1] = out[k - 1] + coef * c
        return out

    def __eq__(self, other):
        if not isinstance(other, StructureConstants):
            return NotImplemented
        return self.dim == other.dim and self.table == other.table


def load_structure_constants(text):
    """Parse the plain text bracket format.

    The first data line is ``dim N``; every following line reads
    ``i j : k c, k c, ...`` and declares [X_i, X_j] = sum c X_k with
    rational c.  ``#`` starts a comment.
    """
    dim = None
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dim is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "dim":
                raise ConfigError("line %d: expected 'dim N' first" % lineno)
            try:
                dim = int(parts[1])
            except ValueError:
                raise ConfigError("line %d: bad dimension %r" % (lineno, parts[1]))
            continue
        if ":" not in line:
            raise ConfigError("line %d: missing ':'" % lineno)
        head, tail = line.split(":", 1)
        try:
            i, j = (int(p) for p in head.split())
        except ValueError:
            raise ConfigError("line %d: bad index pair %r" % (lineno, head.strip()))
        comps = {}
        for chunk in tail.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split()
            if len(parts) != 2:
                raise ConfigError("line %d: bad component %r" % (lineno, chunk))
            try:
                k = int(parts[0])
                c = Fraction(parts[1])
            except ValueError:
                raise ConfigError("line %d: bad component %r" % (lineno, chunk))
            if k in comps:
                raise ConfigError("line %d: index %d repeated" % (lineno, k))
            comps[k] = c
        key = (i, j)
        if key in table or (j, i) in table:
            raise ConfigError("line %d: bracket (%d, %d) listed twice" % (lineno, i, j))
        table[key] = comps
    if dim is None:
        raise ConfigError("no 'dim N' line found")
    return StructureConstants(dim, table)


def check_jacobi(sc, strict=True):
    """Verify the Jacobi identity exactly over all basis triples."""
    n = sc.dim

    def ad_basis(comps, k):
        out = [ZERO] * n
        for m, c in comps.items():
            for p, d in sc.bracket_basis(m, k).items():
                out[p - 1] = out[p - 1] + QQi(c * d)
        return out

    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            for k in range(j + 1, n + 1):
                acc = ad_basis(sc.bracket_basis(i, j), k)
                for p, x in enumerate(ad_basis(sc.bracket_basis(j, k), i)):
                    acc[p] = acc[p] + x
                for p, x in enumerate(ad_basis(sc.bracket_basis(k, i), j)):
                    acc[p] = acc[p] + x
                if any(acc):
                    if strict:
                        raise JacobiViolation(
                            "jacobi identity fails on (X_%d, X_%d, X_%d)" % (i, j, k))
                    return False
    return True


# ---------------------------------------------------------------------------
# linear maps on the real algebra


def linear_map_from_images(dim, images):
    """Build an exact matrix from ``{j: (i, sign)}`` basis images.

    The entry ``j: (i, s)`` means the map sends X_j to s * X_i.
    """
    m = [[Fraction(0)] * dim for _ in range(dim)]
    for j, (i, s) in images.items():
        m[i - 1][j - 1] = Fraction(s)
    return m


def map_apply(m, v):
    """Apply a real matrix (Fraction rows) to a QQi coefficient vector."""
    out = []
    for row in m:
        s = ZERO
        for c, x in zip(row, v):
            if c:
                s = s + x * c
        out.append(s)
    return out


def _map_compose(a, b):
    n = len(a)
    out = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            c = a[i][k]
            if c:
                for j in range(n):
                    if b[k][j]:
                        out[i][j] += c * b[k][j]
    return out


def _is_minus_identity(m):
    n = len(m)
    for i in range(n):
        for j in range(n):
            want = Fraction(-1) if i == j else Fraction(0)
            if m[i][j] != want:
                return False
    return True


def conj_vec(v):
    return [x.conjugate() for x in v]


# ---------------------------------------------------------------------------
# frames


@dataclass
class FrameSpec:
    """Everything needed to build a complex frame on a real algebra."""

    name: str
    sc: StructureConstants
    imap: list
    jmap: list
    vectors: list          # 2n coefficient vectors over QQi, length N each
    metric_diag: list      # N positive Fractions
    split: tuple           # annihilated frame indices, subset of 1..2n
    params: dict = field(default_factory=dict)


class BracketTable:
    """Complex structure constants of a frame basis and its conjugates."""

    def __init__(self, half, entries):
        self.half = half
        self.entries = {}
        for (r, s), comps in entries.items():
            if not (1 <= r < s <= 2 * half):
                raise IndexOutOfRange("bad bracket key (%d, %d)" % (r, s))
            clean = {k: as_qqi(c) for k, c in comps.items() if as_qqi(c)}
            if clean:
                self.entries[(r, s)] = clean

    def bracket(self, r, s):
        """[Z_r, Z_s] as dict index -> QQi, any orientation, bars as 2n+k."""
        if r == s:
            return {}
        if r < s:
            return dict(self.entries.get((r, s), {}))
        return {k: -c for k, c in self.entries.get((s, r), {}).items()}

    def coeff(self, k, r, s):
        """Coefficient of frame element k in [Z_r, Z_s]."""
        return self.bracket(r, s).get(k, ZERO)

    def is_barred(self, k):
        return k > self.half

    def bar(self, k):
        """Index of the conjugate of frame element k."""
        return k - self.half if k > self.half else k + self.half

    def holomorphic_closed(self, strict=False):
        """[Z_r, Z_s] may have no conjugate components for unbarred r, s."""
        h = self.half
        for r in range(1, h + 1):
            for s in range(r + 1, h + 1):
                for k in self.bracket(r, s):
                    if k > h:
                        if strict:
                            raise NonClosedBracket(
                                "[Z_%d, Z_%d] has a conjugate component" % (r, s))
                        return False
        return True


class ComplexFrame:
    """A validated frame together with its complex bracket table."""

    def __init__(self, spec, vectors, table, flips):
        self.spec = spec
        self.vectors = vectors
        self.table = table
        self.flips = flips
        self.dim = spec.sc.dim
        self.half = len(vectors)
        self.n = self.dim // 4
        self.split = tuple(sorted(spec.split))

    def vec(self, k):
        """Coefficient vector of frame element k (bars as half + r)."""
        if 1 <= k <= self.half:
            return self.vectors[k - 1]
        if self.half < k <= 2 * self.half:
            return conj_vec(self.vectors[k - self.half - 1])
        raise IndexOutOfRange("frame index %d outside 1..%d" % (k, 2 * self.half))

    def active(self, split=None):
        split = self.split if split is None else tuple(sorted(split))
        return tuple(k for k in range(1, self.half + 1) if k not in split)

    def pair_of(self, k):
        return k + 1 if k % 2 == 1 else k - 1


def build_complex_frame(spec):
    """Validate a FrameSpec and produce the ComplexFrame.

    Checks run in a fixed order: dimension, linear independence, the
    (1,0) condition for I, J pairing (with sign normalization), and
    unitarity for the given metric.
    """
    sc = spec.sc
    dim = sc.dim
    if dim % 4 != 0:
        raise DimensionNotMultipleOf4("real dimension %d is not 4n" % dim)
    half = dim // 2
    if len(spec.vectors) != half:
        raise DimensionMismatch(
            "expected %d frame vectors, got %d" % (half, len(spec.vectors)))
    vectors = []
    for v in spec.vectors:
        if len(v) != dim:
            raise DimensionMismatch("frame vector length %d, expected %d" % (len(v), dim))
        vectors.append([as_qqi(x) for x in v])
    if len(spec.metric_diag) != dim:
        raise DimensionMismatch("metric diagonal must have %d entries" % dim)

    imap, jmap = spec.imap, spec.jmap
    if not _is_minus_identity(_map_compose(imap, imap)):
        raise ConfigError("I squared is not minus the identity")
    if not _is_minus_identity(_map_compose(jmap, jmap)):
        raise ConfigError("J squared is not minus the identity")
    ij = _map_compose(imap, jmap)
    ji = _map_compose(jmap, imap)
    if any(ij[i][j] + ji[i][j] != 0 for i in range(dim) for j in range(dim)):
        raise ConfigError("I and J do not anticommute")

    # linear independence of the frame and its conjugates
    cols = vectors + [conj_vec(v) for v in vectors]
    m = [[cols[c][i] for c in range(dim)] for i in range(dim)]
    try:
        minv = mat_inv(m)
    except LinearSolveFailure:
        raise LinearlyDependent("frame vectors do not span the complexification")

    # type (1,0) for I
    for a, v in enumerate(vectors, 1):
        iv = map_apply(imap, v)
        if any(iv[i] != QQi(0, 1) * v[i] for i in range(dim)):
            raise ConfigError("frame vector %d is not of type (1,0) for I" % a)

    # J pairing, normalized to J Z_{2k-1} = -conj(Z_{2k})
    flips = []
    for k in range(half // 2):
        v1, v2 = vectors[2 * k], vectors[2 * k + 1]
        w = map_apply(jmap, v1)
        cv2 = conj_vec(v2)
        if all(w[i] == -cv2[i] for i in range(dim)):
            pass
        elif all(w[i] == cv2[i] for i in range(dim)):
            vectors[2 * k + 1] = [-x for x in v2]
            flips.append(2 * k + 2)
        else:
            raise PairingNotInvolutive(
                "J does not pair frame vectors %d and %d" % (2 * k + 1, 2 * k + 2))
        w2 = map_apply(jmap, vectors[2 * k + 1])
        cv1 = conj_vec(v1)
        if any(w2[i] != cv1[i] for i in range(dim)):
            raise PairingNotInvolutive(
                "J pairing on vectors %d, %d is not involutive" % (2 * k + 1, 2 * k + 2))

    if flips:
        # the frame matrix changed, recompute its inverse
        cols = vectors + [conj_vec(v) for v in vectors]
        m = [[cols[c][i] for c in range(dim)] for i in range(dim)]
        minv = mat_inv(m)

    # unitarity: hermitian Gram matrix is the identity, and the frame is
    # isotropic for the bilinear extension of the metric
    g = [Fraction(x) for x in spec.metric_diag]
    for a in range(half):
        for b in range(a, half):
            herm = ZERO
            bil = ZERO
            for i in range(dim):
                herm = herm + vectors[a][i] * vectors[b][i].conjugate() * g[i]
                bil = bil + vectors[a][i] * vectors[b][i] * g[i]
            want = ONE if a == b else ZERO
            if herm != want:
                raise NotUnitary(
                    "hermitian product of Z_%d and Z_%d is %s" % (a + 1, b + 1, herm))
            if bil != ZERO:
                raise NotUnitary(
                    "frame vectors Z_%d and Z_%d are not isotropic" % (a + 1, b + 1))

    # complex bracket table over the full index range
    def colvec(k):
        if k <= half:
            return vectors[k - 1]
        return conj_vec(vectors[k - half - 1])

    entries = {}
    for r in range(1, dim + 1):
        for s in range(r + 1, dim + 1):
            w = sc.bracket(colvec(r), colvec(s))
            coords = mat_vec(minv, w)
            comps = {c + 1: x for c, x in enumerate(coords) if x}
            if comps:
                entries[(r, s)] = comps
    table = BracketTable(half, entries)

    split = tuple(sorted(spec.split))
    for k in split:
        if not (1 <= k <= half):
            raise BadAnnihilatedSet("split index %d outside 1..%d" % (k, half))
    if len(set(split)) != len(split):
        raise BadAnnihilatedSet("split contains repeated indices")

    return ComplexFrame(spec, vectors, table, flips)


# ---------------------------------------------------------------------------
# integrability checks


def nijenhuis_defect(sc, m, i, j):
    """N_M(X_i, X_j) for the real map m, as an exact coefficient vector."""
    dim = sc.dim
    ei = [ONE if p == i - 1 else ZERO for p in range(dim)]
    ej = [ONE if p == j - 1 else ZERO for p in range(dim)]
    mi, mj = map_apply(m, ei), map_apply(m, ej)
    out = sc.bracket(mi, mj)
    for p, x in enumerate(map_apply(m, sc.bracket(mi, ej))):
        out[p] = out[p] - x
    for p, x in enumerate(map_apply(m, sc.bracket(ei, mj))):
        out[p] = out[p] - x
    for p, x in enumerate(sc.bracket(ei, ej)):
        out[p] = out[p] - x
    return out


def check_hypercomplex(frame_or_spec, strict=False):
    """Full integrability of the pair (I, J) at the real level.

    Verifies that the Nijenhuis tensors of both complex structures vanish
    identically, and (when a built frame is passed) that the holomorphic
    frame closes under the bracket.
    """
    spec = getattr(frame_or_spec, "spec", frame_or_spec)
    sc = spec.sc
    for name, m in (("I", spec.imap), ("J", spec.jmap)):
        for i in range(1, sc.dim + 1):
            for j in range(i + 1, sc.dim + 1):
                if any(nijenhuis_defect(sc, m, i, j)):
                    if strict:
                        raise NijenhuisViolation(
                            "N_%s(X_%d, X_%d) does not vanish" % (name, i, j))
                    return False
    table = getattr(frame_or_spec, "table", None)
    if table is not None:
        if not table.holomorphic_closed(strict=strict):
            return False
    return True


def nijenhuis_pair_identities(table, pair):
    """The four bracket identities attached to the J-pair (a, b) = pair.

    Returns the exact values of (B^a_ba, B^b_ba, B^a_aa' + B^a_bb',
    B^b_aa' + B^b_bb') where a prime marks a conjugate index.  All four
    vanish for an integrable structure.
    """
    a, b = pair
    if b != a + 1 or a % 2 != 1:
        raise ConfigError("(%d, %d) is not a J-pair" % (a, b))
    ab, bb = table.bar(a), table.bar(b)
    return (
        table.coeff(a, b, a),
        table.coeff(b, b, a),
        table.coeff(a, a, ab) + table.coeff(a, b, bb),
        table.coeff(b, a, ab) + table.coeff(b, b, bb),
    )


def check_pair_identities(table, pair, strict=False):
    vals = nijenhuis_pair_identities(table, pair)
    if any(vals):
        if strict:
            raise NijenhuisViolation(
                "bracket identities fail on pair %r: %s"
                % (pair, ", ".join(str(v) for v in vals)))
        return False
    return True


def check_foliation(frame, split=None, strict=False):
    """Is ``split`` an admissible annihilated set?

    Two conditions: the split must be a union of J-pairs, and brackets of
    split elements (holomorphic and mixed) may have no components in the
    directions outside the split.
    """
    split = frame.split if split is None else tuple(sorted(split))
    half = frame.half

    def fail(msg):
        if strict:
            raise BadAnnihilatedSet(msg)
        return False

    for k in split:
        if not (1 <= k <= half):
            return fail("split index %d outside 1..%d" % (k, half))
        if frame.pair_of(k) not in split:
            return fail("split is not a union of J-pairs (index %d unpaired)" % k)

    active = set(frame.active(split))
    active_ext = active | {k + half for k in active}
    mixed = list(split) + [k + half for k in split]
    for r in split:
        for s in mixed:
            if r == s:
                continue
            for k in frame.table.bracket(r, s):
                if k in active_ext:
                    return fail(
                        "[Z_%d, Z_%d] leaks onto transverse index %d" % (r, s, k))
    return True


def relabel_spec(spec, order):
    """Permute the frame labels of a FrameSpec, J-pairs moving as blocks.

    ``order`` lists, for each new label 1..2n, the old label it takes;
    pairs must map to pairs with orientation kept, so order[2k] is odd
    and order[2k+1] = order[2k] + 1.
    """
    half = len(spec.vectors)
    if sorted(order) != list(range(1, half + 1)):
        raise ConfigError("order must be a permutation of 1..%d" % half)
    for k in range(0, half, 2):
        if order[k] % 2 != 1 or order[k + 1] != order[k] + 1:
            raise ConfigError("order does not respect J-pairs at position %d" % (k + 1))
    pos = {old: new for new, old in enumerate(order, 1)}
    return FrameSpec(
        name=spec.name + "-relabeled",
        sc=spec.sc,
        imap=spec.imap,
        jmap=spec.jmap,
        vectors=[spec.vectors[o - 1] for o in order],
        metric_diag=list(spec.metric_diag),
        split=tuple(sorted(pos[o] for o in spec.split)),
        params=dict(spec.params),
    )
