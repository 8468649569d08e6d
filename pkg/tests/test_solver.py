from src.series.LambdaSeries import LambdaSeries
from src.series.Poly import Poly, star_eval
from src.series.PowerSeries import PowerSeries
from src.solver.formal_solver import (FormalSolution, StableSpectrum, check_domination, check_formal_residual,
                                      compare_perturbed, construct_formal_solution, degree_report,
                                      fit_parameters, resolvent_poly, resolvent_vector, taylor_solution)
from src.solver.majorant import fit_growth_rate, growth_profile, majorant_table
from src.verify.oracles import generating_function_table, random_power_series, reference_solution, resolvent_defect
from src.utils.errors import (DimensionMismatch, NotCentered, NotDiagonalLinearPart, PreconditionU,
                              ZeroPerturbation)
import numpy as np
import pytest


def bernoulli():
    return PowerSeries(1, 1, {(1,): [-1.0], (2,): [1.0]})


def decoupled():
    return PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0]})


def resonant():
    return PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0], (2, 0): [0.0, 1.0]})


@pytest.mark.parametrize("u, Q, expected", [
    (2.0, Poly([0.0, 1.0]), Poly([-0.25, -0.5])),
    (0.0, Poly([1.0]), Poly([0.0, 1.0])),
    (1.0, Poly([1.0]), Poly([-1.0])),
])
def test_resolvent_examples(u, Q, expected):
    assert resolvent_poly(u, Q) == expected


@pytest.mark.parametrize("u", [-3.0, -1.0, 0.0, 0.5, 2.0, 100.0])
def test_resolvent_identity(u):
    rng = np.random.default_rng(7)
    for degree in range(11):
        Q = Poly(rng.normal(size=(degree + 1, 2)))
        P = resolvent_poly(u, Q)
        assert resolvent_defect(u, Q, P) <= 1e-12


def test_resolvent_vector_logs_resonance():
    P, resonant_components = resolvent_vector([0.0, 1.0], Poly([[1.0, 1.0]]))
    assert resonant_components == [0]
    assert P == Poly([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(DimensionMismatch):
        resolvent_vector([1.0], Poly([[1.0, 1.0]]))


def test_stable_spectrum_validation():
    assert StableSpectrum([-1.0, -2.0]).m == 2
    with pytest.raises(ValueError):
        StableSpectrum([-1.0, 0.5])
    with pytest.raises(ValueError):
        StableSpectrum([-2.0, -1.0])


def test_linear_solution():
    V = PowerSeries(1, 1, {(1,): [-0.7]}, order=5)
    sol = construct_formal_solution(V, StableSpectrum([-0.7]), [2.0], 5)
    assert sol.series.terms == {(1,): Poly([2.0])}
    assert check_formal_residual(sol) == 0.0


def test_decoupled_solution():
    sol = construct_formal_solution(decoupled(), StableSpectrum([-1.0, -2.0]), [3.0, -1.0], 4)
    assert sol.series.terms == {(1, 0): Poly([[3.0, 0.0]]), (0, 1): Poly([[0.0, -1.0]])}
    assert sol(0.5) == pytest.approx([3.0 * np.exp(-0.5), -np.exp(-1.0)])


@pytest.mark.parametrize("c", [1.0, 2.0, -0.5])
def test_bernoulli_coefficients(c):
    sol = construct_formal_solution(bernoulli(), StableSpectrum([-1.0]), [c], 6)
    for k in range(1, 7):
        # c^k / λ^(k-1) with λ = -1
        expected = Poly([c ** k * (-1.0) ** (k - 1)])
        assert (sol.series.terms[(k,)] - expected).max_abs_coeff() <= 1e-12 * abs(c) ** k
    assert check_formal_residual(sol) <= 1e-12
    assert sol.resonance_log == ()


def test_bernoulli_matches_closed_form():
    sol = construct_formal_solution(bernoulli(), StableSpectrum([-1.0]), [1.0], 12)
    for t in np.linspace(5.0, 20.0, 16):
        assert abs(sol(t)[0] - np.exp(-t) / (1.0 + np.exp(-t))) <= 1e-8


def test_resonant_solution():
    sol = construct_formal_solution(resonant(), StableSpectrum([-1.0, -2.0]), [1.5, 0.2], 4)
    assert ((2, 0), 1) in sol.resonance_log
    assert sol.series.terms[(2, 0)] == Poly([[0.0, 0.0], [0.0, 2.25]])
    assert check_formal_residual(sol) <= 1e-9
    report = degree_report(sol)
    assert report.p == 0.0
    assert all(J not in {J for J, _ in sol.resonance_log} for J, _ in report.violations)


@pytest.mark.parametrize("seed", range(4))
def test_random_fields_have_small_residual(seed):
    rng = np.random.default_rng(seed)
    rates = [-1.0, -1.7]
    nonlinear = random_power_series(rng, 2, 2, 3, density=0.6)
    coeffs = {I: b for I, b in nonlinear.coeffs.items() if sum(I) >= 2}
    coeffs[(1, 0)] = [-1.0, 0.0]
    coeffs[(0, 1)] = [0.0, -1.7]
    V = PowerSeries(2, 2, coeffs, order=3)
    sol = construct_formal_solution(V, StableSpectrum(rates), [0.5, -0.3], 6)
    assert check_formal_residual(sol) <= 1e-9
    assert degree_report(sol).violations == []


def test_corrupted_solution_has_residual():
    sol = construct_formal_solution(bernoulli(), StableSpectrum([-1.0]), [1.0], 6)
    terms = dict(sol.series.terms)
    terms[(2,)] = terms[(2,)] + Poly([1e-3])
    corrupted = FormalSolution(LambdaSeries([-1.0], terms, order=6), sol.params, sol.field)
    assert check_formal_residual(corrupted) >= 1e-4


def test_construct_errors():
    spectrum = StableSpectrum([-1.0, -2.0])
    skewed = PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.1, -2.0]})
    with pytest.raises(NotDiagonalLinearPart):
        construct_formal_solution(skewed, spectrum, [1.0, 1.0], 3)
    shifted = PowerSeries(2, 2, {(0, 0): [0.1, 0.0], (1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0]})
    with pytest.raises(NotCentered):
        construct_formal_solution(shifted, spectrum, [1.0, 1.0], 3)
    with pytest.raises(DimensionMismatch):
        construct_formal_solution(decoupled(), spectrum, [1.0], 3)


@pytest.mark.parametrize("V, x0, expected", [
    (PowerSeries(1, 1, {(1,): [-1.0]}), [1.0], Poly([1.0, -1.0, 0.5, -1.0 / 6.0])),
    (PowerSeries(1, 1, {(2,): [1.0]}), [1.0], Poly([1.0, 1.0, 1.0, 1.0])),
    (PowerSeries(1, 1, order=2), [3.0], Poly([3.0])),
])
def test_taylor_solution(V, x0, expected):
    P = taylor_solution(V, x0, 3)
    assert (P - expected).max_abs_coeff() <= 1e-14


def test_taylor_solution_matches_integrator():
    V = PowerSeries(2, 2, {(1, 0): [-1.0, 0.5], (0, 1): [0.0, -2.0], (1, 1): [1.0, 0.0], (2, 0): [0.0, -1.0]})
    x0 = [0.4, -0.3]
    P = taylor_solution(V, x0, 4)
    assert np.allclose(P.evaluate(0.01), reference_solution(V, x0, 0.01), atol=1e-9)


def test_check_domination():
    Q = Poly([0.0, 1.0])
    t0 = check_domination(2.0, Q)
    assert t0 == 1.0
    assert star_eval(resolvent_poly(2.0, Q), 1.0) == pytest.approx(0.75)
    assert check_domination(3.0, Poly([4.0])) == 0.0
    Q5 = Poly([0.0] * 5 + [1.0])
    t0 = check_domination(100.0, Q5)
    assert t0 == pytest.approx(0.1)
    P = resolvent_poly(100.0, Q5)
    for t in np.linspace(t0, 10.0, 100):
        assert star_eval(P, t) <= star_eval(Q5, t)
    with pytest.raises(PreconditionU):
        check_domination(1.5, Q)


def test_majorant_table_small():
    table = majorant_table(1.0, 1, 3, 1)
    assert [table[(k,)] for k in range(4)] == [0.0, 1.0, 1.0, 3.0]
    assert majorant_table(0.3, 2, 3, 2)[(0, 1)] == 1.0
    with pytest.raises(ValueError):
        majorant_table(0.0, 1, 3, 1)


@pytest.mark.parametrize("M, n, m", [(1.0, 1, 1), (0.5, 2, 2), (2.0, 1, 2)])
def test_majorant_matches_generating_function(M, n, m):
    table = majorant_table(M, n, 5, m)
    reference = generating_function_table(M, n, 5, m)
    assert table.values.keys() == reference.keys()
    for J, a in table.values.items():
        assert a == pytest.approx(reference[J], rel=1e-10, abs=1e-12)


def test_fit_growth_rate():
    table = majorant_table(1.0, 1, 6, 1)
    roots = [table[(k,)] ** (1.0 / k) for k in range(1, 7)]
    assert fit_growth_rate(table) == pytest.approx(max(roots))
    assert growth_profile(table) == pytest.approx(roots)
    assert fit_growth_rate(majorant_table(1.0, 1, 1, 2)) == 1.0
    assert fit_growth_rate(majorant_table(1e-9, 1, 4, 1)) == pytest.approx(1.0)


def test_compare_perturbed_bernoulli():
    report = compare_perturbed(bernoulli(), StableSpectrum([-1.0]), [1.0], [0.5], 6)
    assert report.passed
    assert report.dominant == pytest.approx((0.5, 0, -1.0))


def test_compare_perturbed_decoupled():
    report = compare_perturbed(decoupled(), StableSpectrum([-1.0, -2.0]), [1.0, 1.0], [0.0, 1.0], 4)
    assert report.passed
    assert report.component == 1
    assert report.checked >= 1
    assert report.dominant == pytest.approx((1.0, 0, -2.0))


def test_compare_perturbed_errors():
    spectrum = StableSpectrum([-1.0])
    with pytest.raises(ZeroPerturbation):
        compare_perturbed(bernoulli(), spectrum, [1.0], [0.0], 4)
    with pytest.raises(ValueError):
        compare_perturbed(bernoulli(), spectrum, [1.0], [0.5], 4, lambda0=-2.0)


def test_fit_parameters_recovers_c():
    c, t_c = 0.7, 3.0
    state = [c * np.exp(-t_c) / (1.0 + c * np.exp(-t_c))]
    fitted = fit_parameters(bernoulli(), StableSpectrum([-1.0]), state, t_c, 10, newton_steps=3)
    assert fitted[0] == pytest.approx(c, abs=1e-6)
