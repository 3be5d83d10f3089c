import numpy as np
import pytest

from chirow.errors import InvalidParameterError, PoleError
from chirow.model.greens import (
    GreenRecursionState,
    Side,
    boundary_green,
    boundary_resolvent,
    cardano_roots,
    iterate_boundary,
    left_fixed_points,
    left_recursion_step,
    left_singularity_scan,
    left_stability,
    regular_limit,
    right_cubic_coefficients,
    right_fixed_points,
    right_recursion_step,
    right_singularity_scan,
    singular_residue,
    singularity_scan,
    xi_left,
)

G, J1, J2 = 0.5, 1.0, 2.0
ETA = 1e-6 * J2
SCAN_GRID = [-1.5, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5]


class TestLeftRecursion:
    """左边界递推与 QE 端点链预解式的对应。"""

    @pytest.mark.parametrize("n_cells", range(1, 9))
    @pytest.mark.parametrize("omega", [0.37 * J2 + 1j * ETA, 1.3 + 0.01j, 2.9 + 1e-3j])
    def test_matches_direct_inverse(self, n_cells, omega):
        state = boundary_green(Side.LEFT, omega, G, J1, J2, n_cells)
        exact = boundary_resolvent(omega, G, J1, J2, n_cells)
        assert state.step == n_cells
        assert abs(state.value - exact) <= 1e-6 * abs(exact)

    def test_decoupled_emitter(self):
        omega = 0.8 + 0.1j
        for x in (0.0, 0.3 - 0.2j, 5.0j):
            assert left_recursion_step(x, omega, 0.0, J1, J2) == pytest.approx(1 / omega)

    def test_pole(self):
        with pytest.raises(PoleError) as info:
            left_recursion_step(0.0, 0.0, G, J1, J2)
        assert info.value.operation == "greens.left_recursion_step"
        assert info.value.omega == 0.0

    def test_advanced_frequency_rejected(self):
        with pytest.raises(ValueError):
            GreenRecursionState(side=Side.LEFT, omega=1.0 - 1e-3j, value=0j, step=1)

    def test_n_cells_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            boundary_green("left", 0.3 + 1e-3j, G, J1, J2, 0)


class TestLeftFixedPoints:
    """两个不动点、留数与正则分支极限。"""

    @pytest.mark.parametrize("omega", [0.3 + 1e-3j, 0.7 + 1e-6j, -1.1 + 0.05j, 2.4 + 0.2j])
    def test_roots_are_fixed_points(self, omega):
        for root in left_fixed_points(omega, G, J1, J2):
            assert abs(xi_left(root, omega, G, J1, J2)) <= 1e-10 * max(1.0, abs(root))

    @pytest.mark.parametrize("sign", [1, -1])
    def test_singular_residue(self, sign):
        delta = 1e-6 * J2
        omega = sign * (G + delta)
        singular = left_fixed_points(omega, G, J1, J2).singular
        residue = (J2 ** 2 - J1 ** 2) / (2 * J2 ** 2)
        assert singular * (omega - sign * G) == pytest.approx(residue, rel=1e-3)
        assert singular_residue(G, J1, J2) == residue

    @pytest.mark.parametrize("sign", [1, -1])
    def test_regular_limit(self, sign):
        omega = sign * (G + 1e-6 * J2)
        regular = left_fixed_points(omega, G, J1, J2).regular
        assert regular.real == pytest.approx(regular_limit(G, J1, J2, sign), rel=1e-4)
        assert abs(regular.imag) <= 1e-9

    def test_regular_limit_value(self):
        assert regular_limit(G, J1, J2) == pytest.approx((0.25 - 1.0) / (0.5 * 3.0))

    def test_equal_hoppings_have_no_residue(self):
        assert singular_residue(G, 1.0, 1.0) == 0.0
        with pytest.raises(InvalidParameterError):
            regular_limit(G, 1.0, 1.0)

    @pytest.mark.parametrize("omega", [G, -G])
    def test_pole_at_emitter_frequency(self, omega):
        with pytest.raises(PoleError):
            left_fixed_points(omega, G, J1, J2)


class TestStability:
    """奇异不动点处的导数 J1²/J2² − 1。"""

    @pytest.mark.parametrize("j1, j2, expected", [(1.0, 2.0, -0.75), (1.0, 1.0, 0.0), (2.0, 1.0, 3.0)])
    def test_values(self, j1, j2, expected):
        assert left_stability(G, j1, j2) == pytest.approx(expected)

    def test_zero_j2(self):
        with pytest.raises(InvalidParameterError):
            left_stability(G, 1.0, 0.0)


class TestRightRecursion:
    """右边界递推与三次方程不动点。"""

    def test_decoupled_emitter(self):
        omega = 0.6 + 0.05j
        x = 0.2 - 0.1j
        expected = 1 / (omega - J1 ** 2 / (omega - J2 ** 2 * x) ** 2)
        assert right_recursion_step(x, omega, 0.0, J1, J2) == pytest.approx(expected)

    @pytest.mark.parametrize("omega", [0.3 + 1e-3j, 1.7 + 0.02j, -0.9 + 1e-4j, 1j * ETA])
    def test_cardano_matches_numpy(self, omega):
        coefficients = right_cubic_coefficients(omega, G, J1, J2)
        reference = np.roots(coefficients)
        for root in cardano_roots(*coefficients):
            nearest = reference[np.argmin(np.abs(reference - root))]
            assert abs(root - nearest) <= 1e-8 * max(1.0, abs(nearest))

    @pytest.mark.parametrize("omega", [0.3 + 1e-3j, 1.7 + 0.02j, -0.9 + 1e-4j])
    def test_roots_are_fixed_points(self, omega):
        for root in right_fixed_points(omega, G, J1, J2):
            step = right_recursion_step(root, omega, G, J1, J2)
            assert abs(step - root) <= 1e-8 * max(1.0, abs(root))

    def test_zero_frequency_quadratic(self):
        roots = right_fixed_points(0.0, G, J1, J2)
        assert len(roots) == 2
        for root in roots:
            assert abs(np.polyval(right_cubic_coefficients(0.0, G, J1, J2), root)) <= 1e-10

    def test_converges_to_cubic_root(self):
        omega = 1j * ETA
        state = iterate_boundary(Side.RIGHT, omega, G, J1, J2)
        assert state.converged
        assert state.step <= 500
        roots = right_fixed_points(omega, G, J1, J2)
        nearest = roots[np.argmin(np.abs(roots - state.value))]
        assert abs(state.value - nearest) <= 1e-10 * abs(nearest)

    @pytest.mark.parametrize("omega", [0.3 + 0.05j, 1.7 + 0.05j, -0.9 + 0.05j, 2.5 + 0.01j])
    def test_iteration_selects_attracting_root(self, omega):
        state = iterate_boundary(Side.RIGHT, omega, G, J1, J2)
        assert state.converged
        roots = right_fixed_points(omega, G, J1, J2)
        nearest = roots[np.argmin(np.abs(roots - state.value))]
        assert abs(state.value - nearest) <= 1e-9 * max(1.0, abs(nearest))
        h = 1e-7
        slope = (right_recursion_step(nearest + h, omega, G, J1, J2)
                 - right_recursion_step(nearest - h, omega, G, J1, J2)) / (2 * h)
        assert abs(slope) < 1.0

    def test_cardano_widely_separated_roots(self):
        expected = np.array([1e4, 1.0, 1e-4])
        roots = cardano_roots(*np.poly(expected))
        for value in expected:
            assert np.min(np.abs(roots - value)) <= 1e-8 * value

    def test_cardano_rejects_degenerate(self):
        with pytest.raises(PoleError):
            cardano_roots(0.0, 1.0, 2.0, 3.0)


class TestSingularityScan:
    """实频率网格上的奇异性扫描。"""

    def test_right_singular_at_zero(self):
        assert right_singularity_scan(G, J1, J2, SCAN_GRID) == [0.0]

    def test_right_fine_grid(self):
        grid = np.arange(-200, 201) * 1e-3
        assert right_singularity_scan(G, J1, J2, grid) == [0.0]
        assert right_singularity_scan(G, 2.0, 1.0, grid) == []

    def test_left_singular_at_emitter(self):
        assert left_singularity_scan(G, J1, J2, SCAN_GRID) == [-0.5, 0.5]

    def test_trivial_phase(self):
        assert right_singularity_scan(G, 2.0, 1.0, SCAN_GRID) == []
        assert left_singularity_scan(G, 2.0, 1.0, SCAN_GRID) == []

    def test_frame(self):
        frame = singularity_scan("left", G, J1, J2, SCAN_GRID)
        assert list(frame.columns) == ["omega", "re", "im", "converged", "singular", "omega_over_J2"]
        assert len(frame) == len(SCAN_GRID)
        np.testing.assert_allclose(frame["omega_over_J2"], np.asarray(SCAN_GRID) / J2)

    def test_eta_must_be_positive(self):
        with pytest.raises(InvalidParameterError):
            singularity_scan("right", G, J1, J2, SCAN_GRID, eta=0.0)
