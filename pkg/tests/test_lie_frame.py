import dataclasses
from fractions import Fraction

import numpy as np
import pytest

import oracles
from hktsolve import algebras
from hktsolve.errors import (
    BadAnnihilatedSet,
    ConfigError,
    DimensionMismatch,
    DimensionNotMultipleOf4,
    IndexOutOfRange,
    JacobiViolation,
    LinearlyDependent,
    NijenhuisViolation,
    NotUnitary,
)
from hktsolve.exact import QQi
from hktsolve.lie_frame import (
    StructureConstants,
    build_complex_frame,
    check_foliation,
    check_hypercomplex,
    check_jacobi,
    check_pair_identities,
    load_structure_constants,
    nijenhuis_pair_identities,
    relabel_spec,
)


def test_parse_roundtrip():
    sc = load_structure_constants(algebras.su3_bracket_text())
    assert sc.dim == 8
    assert sc == algebras.su3().sc
    # orientation is normalized: both query directions work
    assert sc.bracket_basis(5, 6) == {1: Fraction(1), 2: Fraction(1)}
    assert sc.bracket_basis(6, 5) == {1: Fraction(-1), 2: Fraction(-1)}


def test_parse_comments_and_errors():
    sc = load_structure_constants("# leading comment\ndim 4\n1 2 : 3 1/2\n")
    assert sc.bracket_basis(1, 2) == {3: Fraction(1, 2)}
    with pytest.raises(ConfigError):
        load_structure_constants("1 2 : 3 1")  # missing dim line
    with pytest.raises(IndexOutOfRange):
        load_structure_constants("dim 4\n1 9 : 3 1\n")
    with pytest.raises(IndexOutOfRange):
        load_structure_constants("dim 4\n1 2 : 9 1\n")


def test_jacobi_all_registry():
    for name, params in [("su3", {}), ("semidirect8", {"c": 2, "w": 5}),
                         ("semidirect12", {}), ("nilpotent8", {})]:
        spec = algebras.get_algebra(name, **params)
        assert check_jacobi(spec.sc, strict=True)


def test_jacobi_violation():
    sc = load_structure_constants(algebras.su3_bracket_text())
    sc.table[(5, 6)] = {1: Fraction(1), 2: Fraction(2)}
    assert not check_jacobi(sc, strict=False)
    with pytest.raises(JacobiViolation):
        check_jacobi(sc, strict=True)


def test_su3_frame_builds_without_flips():
    frame = build_complex_frame(algebras.su3())
    assert frame.flips == []
    assert frame.half == 4 and frame.n == 2
    assert frame.split == (1, 2)


SU3_COMPLEX_GOLDEN = [
    # frozen by hand from the real table; oracle-reverified below
    (1, 2, {2: QQi(-2)}),
    (1, 3, {3: QQi(-1, -3)}),
    (1, 4, {4: QQi(-1, 3)}),
    (2, 3, {}),
    (2, 4, {}),
    (3, 4, {2: QQi(-2)}),
    (1, 5, {}),
    (1, 6, {6: QQi(2)}),
    (1, 7, {7: QQi(1, 3)}),
    (1, 8, {8: QQi(1, -3)}),
    (2, 6, {1: QQi(2), 5: QQi(-2)}),
    (2, 7, {4: QQi(-2)}),
    (2, 8, {3: QQi(2)}),
    (3, 7, {1: QQi(1, -1), 5: QQi(-1, -1)}),
    (4, 8, {1: QQi(1, 1), 5: QQi(-1, 1)}),
]


def test_su3_complex_brackets_golden():
    frame = build_complex_frame(algebras.su3())
    for r, s, want in SU3_COMPLEX_GOLDEN:
        assert frame.table.bracket(r, s) == want, (r, s)


ORACLE_BUILDS = {
    "su3": {},
    "semidirect8": {"c": 2, "w": 5},
    "semidirect12": {"c": 1, "w1": 3, "w2": -2},
    "nilpotent8": {},
}


@pytest.mark.parametrize("name", sorted(ORACLE_BUILDS))
def test_bracket_table_matches_float_oracle(name):
    frame = build_complex_frame(algebras.get_algebra(name, **ORACLE_BUILDS[name]))
    coeffs = oracles.complex_bracket_oracle(frame)
    ext = 2 * frame.half
    for r in range(1, ext + 1):
        for s in range(r + 1, ext + 1):
            got = coeffs(r, s)
            table = frame.table.bracket(r, s)
            for k in range(1, ext + 1):
                want = table.get(k, QQi(0)).to_complex()
                assert abs(got[k - 1] - want) < 1e-12, (r, s, k)


def test_nijenhuis_float_oracle_then_exact(frames):
    for frame in frames.values():
        assert oracles.nijenhuis_oracle(frame.spec, "I") < 1e-12
        assert oracles.nijenhuis_oracle(frame.spec, "J") < 1e-12
        assert check_hypercomplex(frame, strict=True)


def test_broken_j_fails_both_ways():
    spec = algebras.su3()
    _, bad_jmap = algebras._maps(8, [(0, "a"), (4, "a")])
    bad = dataclasses.replace(spec, name="su3-badj", jmap=bad_jmap)
    assert oracles.nijenhuis_oracle(bad, "J") > 0.5
    with pytest.raises(NijenhuisViolation):
        check_hypercomplex(bad, strict=True)


def test_dimension_and_vector_validation():
    spec = algebras.su3()
    small = StructureConstants(6, {})
    with pytest.raises(DimensionNotMultipleOf4):
        build_complex_frame(dataclasses.replace(
            spec, sc=small, imap=[[Fraction(0)] * 6] * 6,
            jmap=[[Fraction(0)] * 6] * 6))
    with pytest.raises(DimensionMismatch):
        build_complex_frame(dataclasses.replace(spec, vectors=spec.vectors[:3]))
    with pytest.raises(LinearlyDependent):
        build_complex_frame(dataclasses.replace(
            spec, vectors=[spec.vectors[0], spec.vectors[0],
                           spec.vectors[2], spec.vectors[3]]))


def test_non_holomorphic_vector_rejected():
    spec = algebras.su3()
    # X_1 + i X_2 lies in the (0,1) eigenspace of I, not (1,0)
    wrong = [QQi(0)] * 8
    wrong[0] = QQi(1)
    wrong[1] = QQi(0, 1)
    with pytest.raises(ConfigError):
        build_complex_frame(dataclasses.replace(
            spec, vectors=[wrong] + list(spec.vectors[1:])))


def test_metric_must_make_frame_unitary():
    spec = algebras.su3()
    with pytest.raises(NotUnitary):
        build_complex_frame(dataclasses.replace(
            spec, metric_diag=[Fraction(1)] * 8))


def test_pairing_flip_restores_canonical_frame():
    spec = algebras.su3()
    flipped = [[-x for x in spec.vectors[1]]]
    vectors = [spec.vectors[0]] + flipped + list(spec.vectors[2:])
    frame = build_complex_frame(dataclasses.replace(spec, vectors=vectors))
    assert frame.flips == [2]
    reference = build_complex_frame(spec)
    assert frame.table.entries == reference.table.entries
    assert frame.vec(2) == reference.vec(2)


def test_pair_identities_are_order_sensitive():
    frame = build_complex_frame(algebras.su3())
    vals = nijenhuis_pair_identities(frame.table, (1, 2))
    assert any(v != 0 for v in vals)  # the natural order violates them
    relabeled = build_complex_frame(relabel_spec(algebras.su3(), (3, 4, 1, 2)))
    assert nijenhuis_pair_identities(relabeled.table, (1, 2)) == (
        QQi(0), QQi(0), QQi(0), QQi(0))
    assert check_pair_identities(relabeled.table, (1, 2), strict=True)


def test_foliation_checks():
    frame = build_complex_frame(algebras.su3())
    assert check_foliation(frame)
    # not a union of J-pairs
    assert not check_foliation(frame, split=(1, 3))
    with pytest.raises(BadAnnihilatedSet):
        check_foliation(frame, split=(1, 3), strict=True)
    # J-pair but brackets leak onto the transverse pair
    assert not check_foliation(frame, split=(3, 4))
    big = build_complex_frame(algebras.get_algebra("semidirect12"))
    assert check_foliation(big, split=(1, 2, 5, 6))


def test_relabel_validation():
    spec = algebras.su3()
    with pytest.raises(ConfigError):
        relabel_spec(spec, (1, 2, 3))  # wrong length
    with pytest.raises(ConfigError):
        relabel_spec(spec, (1, 2, 4, 3))  # breaks J-pair orientation
    with pytest.raises(ConfigError):
        relabel_spec(spec, (2, 3, 4, 1))
    out = relabel_spec(spec, (3, 4, 1, 2))
    assert out.name.endswith("-relabeled")
    assert tuple(sorted(out.split)) == (3, 4)


def test_get_algebra_unknown_name():
    with pytest.raises(ConfigError):
        algebras.get_algebra("nope")
