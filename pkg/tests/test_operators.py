import pytest
import numpy as np
import scipy.sparse

from ppgmres.errors import ConfigurationError, DimensionError, MatrixMarketError, UnknownSpectrumError
from ppgmres.operators import (
    WorkCounter, bidiagonal_operator, diagonal_operator, hatano_nelson_operator,
    ray_spectrum_operator, ray_spectrum_values, shifted_operator, sparse_operator, spectrum_image,
)
from ppgmres.operators.matrix_market import read_matrix_market, write_matrix_market
from ppgmres.operators.models import SparseMatrix
from ppgmres.operators.presets import example1_spectrum, example7_spectrum, example9_spectrum, make_preset
from ppgmres.polynomial import PreconditionerPolynomial

# Test data
SYMMETRIC_MTX = """%%MatrixMarket matrix coordinate real symmetric
% a comment
3 3 4
1 1 2.0
2 1 -1.0
2 2 2.0
3 3 5.5
"""

BAD_ENTRY_MTX = """%%MatrixMarket matrix coordinate real general
2 2 2
1 1 1.0
2 x 3.0
"""

SHORT_MTX = """%%MatrixMarket matrix coordinate real general
2 2 3
1 1 1.0
2 2 3.0
"""


def test_work_counter_totals():
    counter = WorkCounter()
    counter.add(matvecs=2, vector_ops=3)
    counter.add(dot_products=4)
    assert counter.snapshot() == {'matvecs': 2, 'vector_ops': 3, 'dot_products': 4}


def test_sparse_operator_counts_matvecs():
    op = diagonal_operator([1.0, 2.0, 3.0])
    y = op.matvec(np.ones(3))
    np.testing.assert_allclose(y, [1.0, 2.0, 3.0])
    assert op.counter.matvecs == 1
    assert op.applications == 1


def test_matvec_rejects_wrong_length():
    op = diagonal_operator([1.0, 2.0])
    with pytest.raises(DimensionError):
        op.matvec(np.ones(3))


def test_shifted_operator_charges_base_counter_once():
    """A shift adds no matvecs of its own."""
    op = diagonal_operator([1.0, 2.0, 3.0])
    shifted = shifted_operator(op, 2.0)
    y = shifted.matvec(np.ones(3))
    np.testing.assert_allclose(y, [-1.0, 0.0, 1.0])
    assert shifted.counter is op.counter
    assert op.counter.matvecs == 1
    np.testing.assert_allclose(shifted.eigenvalues, [-1.0, 0.0, 1.0])


def test_bidiagonal_operator_structure():
    op = bidiagonal_operator([-2.0, -1.0, 1.0, 2.0], 1.0)
    dense = op.to_dense()
    np.testing.assert_allclose(np.diag(dense), [-2.0, -1.0, 1.0, 2.0])
    np.testing.assert_allclose(np.diag(dense, k=1), [1.0, 1.0, 1.0])
    assert np.count_nonzero(np.tril(dense, k=-1)) == 0
    np.testing.assert_allclose(op.eigenvalues.real, [-2.0, -1.0, 1.0, 2.0])


def test_sparse_operator_rejects_non_square():
    with pytest.raises(DimensionError):
        sparse_operator(np.ones((2, 3)))


def test_ray_values_are_conjugate_closed():
    values = ray_spectrum_values(5, 230.0, 4)
    assert len(values) == 20
    for value in values:
        assert np.conj(value) in values
    np.testing.assert_allclose(np.sort(np.abs(values))[:5], np.ones(5))


def test_ray_operator_has_recorded_spectrum():
    op = ray_spectrum_operator(60, 5, 230.0, 4, seed=3)
    assert op.n == 60
    computed = np.linalg.eigvals(op.to_dense())
    for value in op.eigenvalues:
        assert np.min(np.abs(computed - value)) < 1e-8


def test_ray_operator_filler_has_no_repeats():
    op = ray_spectrum_operator(60, 5, 230.0, 4, seed=3)
    reals = np.array([value.real for value in op.eigenvalues if value.imag == 0.0])
    # four from the zero-angle ray, forty filler values
    assert len(reals) == 44
    assert len(np.unique(reals)) == 44
    assert np.all((reals >= 1.0) & (reals <= 4.0))


def test_ray_operator_too_small():
    with pytest.raises(DimensionError):
        ray_spectrum_operator(10, 5, 230.0, 4)


def test_hatano_nelson_periodic_corners():
    op = hatano_nelson_operator(6, 0.5, d=np.zeros(6), periodic=True)
    dense = op.to_dense()
    assert dense[0, 5] == pytest.approx(np.exp(-0.5))
    assert dense[5, 0] == pytest.approx(np.exp(0.5))
    assert dense[1, 0] == pytest.approx(np.exp(-0.5))
    assert dense[0, 1] == pytest.approx(np.exp(0.5))
    assert not op.has_known_spectrum


def test_hatano_nelson_default_is_tridiagonal():
    dense = hatano_nelson_operator(6, 0.5, d=np.ones(6)).to_dense()
    assert np.count_nonzero(np.triu(dense, k=2)) == 0
    assert np.count_nonzero(np.tril(dense, k=-2)) == 0
    # similar to a symmetric matrix
    assert np.max(np.abs(np.linalg.eigvals(dense).imag)) < 1e-10


def test_hatano_preset_is_periodic():
    op = make_preset("hatano")
    first = np.zeros(op.n)
    first[0] = 1.0
    assert op.matvec(first)[-1] == pytest.approx(np.exp(0.5))


def test_hatano_nelson_disorder_is_seeded():
    a = hatano_nelson_operator(20, 0.5, seed=1).to_dense()
    b = hatano_nelson_operator(20, 0.5, seed=1).to_dense()
    c = hatano_nelson_operator(20, 0.5, seed=2).to_dense()
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(np.diag(a), np.diag(c))
    assert np.all((np.diag(a) >= 0.0) & (np.diag(a) <= 3.6))


def test_preset_spectra_sizes():
    assert len(example1_spectrum()) == 5000
    assert len(example7_spectrum()) == 5000
    assert len(example9_spectrum()) == 5000
    assert 0.0 not in example1_spectrum()


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        make_preset("example42")


def test_ray_preset_by_angle():
    op = make_preset("rays:230")
    assert op.n == 2000
    assert op.has_known_spectrum


def test_spectrum_image_needs_known_spectrum():
    poly = PreconditionerPolynomial([2.0])
    op = hatano_nelson_operator(5, 0.5, d=np.ones(5))
    with pytest.raises(UnknownSpectrumError):
        spectrum_image(poly, op=op)


def test_spectrum_image_on_diagonal():
    poly = PreconditionerPolynomial([2.0, 4.0])
    op = diagonal_operator([1.0, 2.0, 4.0])
    np.testing.assert_allclose(spectrum_image(poly, op=op).real, [1 - 0.5 * 0.75, 1.0, 1.0])


def test_read_symmetric_matrix_market(tmp_path):
    path = tmp_path / "sym.mtx"
    path.write_text(SYMMETRIC_MTX)
    matrix = read_matrix_market(path)
    dense = matrix.csr.toarray()
    assert matrix.name == "sym"
    assert matrix.n == 3
    assert dense[0, 1] == -1.0 and dense[1, 0] == -1.0
    assert dense[2, 2] == 5.5
    assert matrix.nnz == 5
    np.testing.assert_array_equal(matrix.row_offsets, [0, 2, 4, 5])
    np.testing.assert_array_equal(matrix.column_indices, [0, 1, 0, 1, 2])


def test_matrix_market_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text(BAD_ENTRY_MTX)
    with pytest.raises(MatrixMarketError) as exc_info:
        read_matrix_market(path)
    assert exc_info.value.line_number == 4


def test_matrix_market_entry_count_checked(tmp_path):
    path = tmp_path / "short.mtx"
    path.write_text(SHORT_MTX)
    with pytest.raises(MatrixMarketError):
        read_matrix_market(path)


def test_written_matrix_reads_back(tmp_path):
    op = bidiagonal_operator([-1.5, 0.25, 3.0], 0.1)
    path = write_matrix_market(tmp_path / "bidiag.mtx", op.matrix)
    matrix = read_matrix_market(path)
    np.testing.assert_array_equal(matrix.csr.toarray(), op.to_dense())


def test_sparse_matrix_must_be_square():
    with pytest.raises(ValueError):
        SparseMatrix(scipy.sparse.csr_matrix(np.ones((2, 3))))
