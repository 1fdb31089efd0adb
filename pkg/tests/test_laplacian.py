import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import fd_eigenvalue
from uniqcert.grid import GridDomain
from uniqcert.laplacian import (
    box_eigenvalue,
    build_laplacian,
    embedding_constant,
    poincare_constant,
    sine_mode,
)
from uniqcert.operators import apply


class TestBuild:
    def test_three_node_matrix_entries(self, line3):
        M = build_laplacian(line3).matrix.toarray()
        expected = 16 * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2]], dtype=float)
        for i in range(3):
            for j in range(3):
                assert M[i, j] == expected[i, j]

    def test_five_point_stencil(self):
        d = GridDomain.box([0.0, 0.0], [1.0, 1.0], 4)
        M = build_laplacian(d).matrix
        h2 = d.spacing[0] ** 2
        centre = d.flat_index((1, 2))
        row = M.getrow(centre)
        entries = {int(j): v for j, v in zip(row.indices, row.data)}
        neighbours = [d.flat_index(m) for m in [(0, 2), (2, 2), (1, 1), (1, 3)]]
        assert entries[centre] == pytest.approx(4 / h2, rel=1e-15)
        assert set(entries) == {centre, *neighbours}
        for j in neighbours:
            assert entries[j] == pytest.approx(-1 / h2, rel=1e-15)

    def test_unequal_spacing_diagonal(self):
        d = GridDomain.box([0.0, 0.0, 0.0], [1.0, 2.0, 0.5], [3, 4, 5])
        A = build_laplacian(d)
        hx, hy, hz = d.spacing
        assert np.allclose(A.diagonal, 2 / hx**2 + 2 / hy**2 + 2 / hz**2, rtol=1e-15)

    @pytest.mark.parametrize("counts", [[9], [5, 6], [4, 5, 6]])
    def test_row_sums_vanish_away_from_boundary(self, counts):
        m = len(counts)
        d = GridDomain.box([0.0] * m, [1.0] * m, counts)
        A = build_laplacian(d)
        out = apply(A, d.field(np.ones(d.n))).values
        touches = np.any((d.indices == 0) | (d.indices == np.array(counts) - 1), axis=1)
        assert np.all(np.abs(out[~touches]) <= 1e-14 * A.diagonal[~touches])
        assert np.all(out[touches] > 0.1 * A.diagonal.min() / d.dim)

    @pytest.mark.parametrize("counts", [[9], [5, 6], [4, 5, 6]])
    def test_operator_invariants(self, counts):
        m = len(counts)
        build_laplacian(GridDomain.box([0.0] * m, [1.0] * m, counts)).check_invariants()


class TestPoincare:
    def test_coarse_closed_form(self, line3):
        assert poincare_constant(line3) == pytest.approx(64 * math.sin(math.pi / 8) ** 2, rel=1e-12)

    def test_fine_1d_near_pi_squared(self):
        lam = poincare_constant(GridDomain.box([0.0], [1.0], 127))
        assert lam == pytest.approx(math.pi**2, rel=2e-4)

    def test_cube_near_three_pi_squared(self):
        d = GridDomain.box([1.0] * 3, [2.0] * 3, 15)
        lam = poincare_constant(d)
        assert lam == pytest.approx(fd_eigenvalue([15] * 3), rel=1e-10)
        assert lam == pytest.approx(3 * math.pi**2, rel=0.005)

    def test_closed_form_helper(self):
        d = GridDomain.box([0.0, -1.0], [2.0, 1.0], [7, 9])
        assert box_eigenvalue(d) == pytest.approx(fd_eigenvalue([7, 9], [0.0, -1.0], [2.0, 1.0]), rel=1e-15)
        s = sine_mode(d)
        assert (apply(build_laplacian(d), s) - box_eigenvalue(d) * s).norm() <= 1e-10 * s.norm()


class TestEmbedding:
    def test_three_nodes_against_explicit_inverse(self, line3):
        # inverse of tridiag(-1,2,-1) is [[3,2,1],[2,4,2],[1,2,3]]/4, so A^-1 = that/64
        inv = [[Fraction(v, 64) for v in row] for row in [[3, 2, 1], [2, 4, 2], [1, 2, 3]]]
        h = Fraction(1, 4)
        norms = []
        for i in range(3):
            col = [inv[r][i] / h for r in range(3)]  # A^-1 delta_i, delta_i = e_i / h
            norms.append(math.sqrt(h * sum(c * c for c in col)))
        c = embedding_constant(line3, build_laplacian(line3))
        assert c.value == pytest.approx(max(norms), rel=1e-12)
        assert c.value == pytest.approx(math.sqrt(6) / 16, rel=1e-12)
        assert c.provenance == "exact" and c.node == 1
        dense = np.linalg.inv(build_laplacian(line3).matrix.toarray())
        assert c.value == pytest.approx(max(np.sqrt(0.25 * np.sum((dense / 0.25) ** 2, axis=0))), rel=1e-12)

    @pytest.mark.parametrize(
        "d",
        [GridDomain.box([0.0], [1.0], 15), GridDomain.box([0.0, 0.0], [1.0, 2.0], [6, 7]),
         GridDomain.box([1.0] * 3, [2.0] * 3, 5)],
        ids=["1d", "2d", "3d"],
    )
    def test_matches_dense_green_function(self, d):
        A = build_laplacian(d)
        G = np.linalg.inv(A.matrix.toarray()) / d.cell_volume
        expect = np.max(np.sqrt(d.cell_volume * np.sum(G * G, axis=0)))
        assert embedding_constant(d, A).value == pytest.approx(expect, rel=1e-10)

    @pytest.mark.parametrize(
        "d",
        [GridDomain.box([0.0], [1.0], 31), GridDomain.box([0.0, 0.0], [1.0, 1.0], 9),
         GridDomain.box([1.0] * 3, [2.0] * 3, 5)],
        ids=["1d", "2d", "3d"],
    )
    def test_sup_norm_bound_and_duality(self, d, rng):
        A = build_laplacian(d)
        c = embedding_constant(d, A).value
        G = np.linalg.inv(A.matrix.toarray()) / d.cell_volume
        green_norms = np.sqrt(d.cell_volume * np.sum(G * G, axis=0))
        for _ in range(100):
            u = d.field(rng.standard_normal(d.n) * rng.uniform(0.1, 10))
            Au = apply(A, u).norm()
            assert u.max_abs() <= (c + 1e-10) * Au
            assert np.all(np.abs(u.values) <= green_norms * Au * (1 + 1e-12))

    def test_sampled_is_lower_bound(self, cube7, cube7_op):
        full = embedding_constant(cube7, cube7_op)
        part = embedding_constant(cube7, cube7_op, sample=[0, 5, 17])
        assert part.provenance == "sampled"
        assert part.value <= full.value * (1 + 1e-12)
        centre = cube7.flat_index((3, 3, 3))
        assert embedding_constant(cube7, cube7_op, sample=[centre]).value == pytest.approx(full.value, rel=1e-10)

    def test_refinement_stabilises_at_green_function_limit(self):
        # continuum: max_x |G(x,.)|_L2 = sqrt(x^2 (1-x)^2 / 3) at x = 1/2
        limit = 1 / (4 * math.sqrt(3))
        values = []
        for c in (7, 15, 31, 63):
            d = GridDomain.box([0.0], [1.0], c)
            values.append(embedding_constant(d, build_laplacian(d)).value)
        gaps = [abs(v - limit) for v in values]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-3 * limit
        fine = GridDomain.box([0.0], [1.0], 255)
        reference = embedding_constant(fine, build_laplacian(fine)).value
        assert values[-1] == pytest.approx(reference, rel=1e-3)

    def test_block_size_does_not_change_result(self, cube7, cube7_op):
        a = embedding_constant(cube7, cube7_op, block=256)
        b = embedding_constant(cube7, cube7_op, block=7)
        assert a.value == pytest.approx(b.value, rel=1e-12)

    def test_invalid_samples(self, cube7, cube7_op):
        with pytest.raises(ValueError):
            embedding_constant(cube7, cube7_op, sample=[cube7.n])
        with pytest.raises(ValueError):
            embedding_constant(cube7, cube7_op, sample=[])
