from src.series.PowerSeries import PowerSeries
from src.solver.formal_solver import StableSpectrum, construct_formal_solution
from src.tracer.PiecewiseField import (Equilibrium, PiecewiseField, centered_field, check_field_consistency,
                                       field_to_dict, load_field)
from src.tracer.asymptotics import (EventuallyInside, EventuallyOutside, Undecided, asymptotic_membership,
                                    capture_verdict, hyperplane_invariant)
from src.tracer.flow_tracer import (ExitOrder, InsideToOrder, TraceOptions, choose_next_cell,
                                    continuation_error_exponent, local_exit_order, trace_flow, write_trace)
from src.tracer.systems import (_split_cover, bernoulli_system, decoupled_system, onedim_system, spiral_system,
                                tangency_system)
from src.geometry.CellCover import cover_to_dict
from src.utils.errors import ChatteringGuard, EquilibriumNotInCell, LeftCover, NotCentered
import numpy as np
import json
import pytest


def test_onedim_single_switch():
    trace = trace_flow(onedim_system(), [1.0], 2.0)
    assert len(trace.switches) == 1
    switch = trace.switches[0]
    assert switch.t == pytest.approx(1.0, abs=1e-8)
    assert (switch.from_cell, switch.to_cell) == (1, 0)
    assert trace.status == "t_end"
    assert trace.times[-1] == pytest.approx(2.0)
    assert trace.final_state == pytest.approx([-1.0])
    assert [c for _, _, c in trace.active_cell_intervals] == [1, 0]


def test_switch_times_increase():
    trace = trace_flow(spiral_system(), [1.0, 0.0], 5.0)
    times = [s.t for s in trace.switches]
    assert len(times) >= 4
    assert all(a < b for a, b in zip(times, times[1:]))
    assert np.all(np.diff(trace.times) >= 0.0)


def test_leaving_the_cover():
    with pytest.raises(LeftCover):
        trace_flow(onedim_system(), [1.0], 5.0)
    with pytest.raises(LeftCover):
        trace_flow(onedim_system(), [3.0], 1.0)


def test_decoupled_switch_and_capture():
    field = decoupled_system()
    trace = trace_flow(field, [1.0, 2.0], 20.0)
    assert len(trace.switches) == 1
    assert trace.switches[0].t == pytest.approx(np.log(2.0), abs=1e-6)
    assert trace.final_cell == 1
    assert trace.status == "captured"
    assert np.linalg.norm(trace.final_state) <= 1e-3
    verdict, sol = capture_verdict(field, trace)
    assert verdict == EventuallyInside(1)
    assert sol.params[1] == pytest.approx(2.0, rel=1e-4)


@pytest.mark.parametrize("opts", [TraceOptions(), TraceOptions().halved()])
def test_excursion_within_one_step(opts):
    # y = (t - 1)^2 - 0.01 dips below the split on (0.9, 1.1)
    cover = _split_cover([0.0, 1.0], 5.0, [[0.0, -2.5], [0.0, 2.5]])
    V = PowerSeries(2, 2, {(0, 0): [1.0, -2.0], (1, 0): [0.0, 2.0]}, order=1)
    trace = trace_flow(PiecewiseField(cover, [V, V]), [0.0, 0.99], 3.0, opts)
    assert [(s.from_cell, s.to_cell) for s in trace.switches] == [(1, 0), (0, 1)]
    assert [s.t for s in trace.switches] == pytest.approx([0.9, 1.1], abs=1e-6)
    assert [c for _, _, c in trace.active_cell_intervals] == [1, 0, 1]
    for x, cell in zip(trace.states, trace.cells):
        assert cover.cells[cell].signed_distances(x).max() <= 1e-8
    assert trace.final_state == pytest.approx([3.0, 3.99], abs=1e-8)


def test_trace_from_equilibrium():
    trace = trace_flow(decoupled_system(), [0.0, 0.0], 5.0)
    assert trace.switches == []
    assert trace.status == "captured"
    assert np.array_equal(trace.final_state, [0.0, 0.0])


def test_bernoulli_trace_matches_closed_form():
    trace = trace_flow(bernoulli_system(), [0.5], 5.0)
    assert trace.status == "t_end"
    assert trace.final_state[0] == pytest.approx(1.0 / (1.0 + np.exp(5.0)), abs=1e-8)


def test_spiral_chatters():
    with pytest.raises(ChatteringGuard) as info:
        trace_flow(spiral_system(), [1.0, 0.0], 50.0, TraceOptions(max_switches=20))
    trace = info.value.trace
    assert trace.status == "chattering"
    assert len(trace.switches) == 21


def test_choose_next_cell():
    field = onedim_system()
    assert choose_next_cell(field, [0.0], 0.0) == 0
    assert choose_next_cell(field, [0.5], 0.0) == 1
    assert choose_next_cell(tangency_system(), [0.0, 0.0], 0.0) == 1
    with pytest.raises(LeftCover):
        choose_next_cell(field, [4.0], 0.0)


def test_local_exit_orders():
    cover = onedim_system().cover
    rightward = PiecewiseField(cover, [PowerSeries.constant([1.0], 1)] * 2)
    assert local_exit_order(rightward, 0, [0.0]) == ExitOrder(1, 1.0, 0)
    order = local_exit_order(tangency_system(), 0, [0.0, 0.0])
    assert (order.k, order.facet) == (2, 0)
    assert order.a == pytest.approx(1.0)
    assert isinstance(local_exit_order(tangency_system(), 1, [0.0, 0.0]), InsideToOrder)
    contraction = PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -1.0]})
    diagonal = PiecewiseField(decoupled_system().cover, [contraction, contraction])
    assert local_exit_order(diagonal, 0, [1.0, 1.0]) == InsideToOrder(8)


def test_tangency_continuation_order():
    slope, errors = continuation_error_exponent(tangency_system(), 1, [0.0, 0.0], 2)
    assert slope >= 2.9
    assert errors[0] < errors[-1]


def test_field_consistency():
    report = check_field_consistency(tangency_system(), samples=50)
    assert report.samples > 0
    assert report.max_disagreement <= 1e-12
    broken = tangency_system()
    broken.fields[1] = PowerSeries(2, 2, {(0, 0): [1.0, 0.5], (1, 0): [0.0, 2.0]}, order=1)
    assert check_field_consistency(broken, samples=50).max_disagreement == pytest.approx(0.5)


def test_asymptotic_membership_decoupled():
    field = decoupled_system()
    sol = construct_formal_solution(field.fields[1], field.equilibrium.spectrum, [1.0, 2.0], 6)
    assert asymptotic_membership(field, sol, 1) == EventuallyInside(1)
    verdict = asymptotic_membership(field, sol, 0)
    assert isinstance(verdict, EventuallyOutside)
    assert verdict.facet == 0
    assert verdict.dominant == pytest.approx((1.0 / np.sqrt(2.0), 0, -1.0))
    assert str(asymptotic_membership(field, sol, 1)) == "EventuallyInside cell 1"


def test_solution_confined_to_invariant_facet():
    cover = _split_cover([0.0, 1.0], 1.0, [[0.0, -0.5], [0.0, 0.5]])
    V = PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0]}, order=1)
    field = PiecewiseField(cover, [V, V], Equilibrium(np.zeros(2), StableSpectrum([-1.0, -2.0])))
    sol = construct_formal_solution(V, field.equilibrium.spectrum, [1.0, 0.0], 4)
    assert hyperplane_invariant(V, [0.0, 1.0])
    assert asymptotic_membership(field, sol, 1) == EventuallyInside(1)


def test_truncation_limited_is_undecided():
    cover = _split_cover([0.0, 1.0], 1.0, [[0.0, -0.5], [0.0, 0.5]])
    V = PowerSeries(2, 2, {(1, 0): [-1.0, 0.0], (0, 1): [0.0, -2.0], (5, 0): [0.0, 1.0]}, order=5)
    field = PiecewiseField(cover, [V, V], Equilibrium(np.zeros(2), StableSpectrum([-1.0, -2.0])))
    assert not hyperplane_invariant(V, [0.0, 1.0])
    sol = construct_formal_solution(V, field.equilibrium.spectrum, [1.0, 0.0], 4)
    verdict = asymptotic_membership(field, sol, 1)
    assert isinstance(verdict, Undecided)
    assert verdict.reason == "truncation-limited"
    # one more order resolves it: y = -e^{-5t}/3 sinks below the facet
    sol = construct_formal_solution(V, field.equilibrium.spectrum, [1.0, 0.0], 5)
    verdict = asymptotic_membership(field, sol, 1)
    assert isinstance(verdict, EventuallyOutside)
    assert verdict.dominant == pytest.approx((1.0 / 3.0, 0, -5.0))
    assert asymptotic_membership(field, sol, 0) == EventuallyInside(0)


def test_equilibrium_not_in_cell():
    field = decoupled_system()
    shifted = PiecewiseField(field.cover, field.fields, Equilibrium(np.array([2.0, -2.0]), field.equilibrium.spectrum))
    sol = construct_formal_solution(field.fields[0], field.equilibrium.spectrum, [1.0, 2.0], 4)
    with pytest.raises(EquilibriumNotInCell):
        asymptotic_membership(shifted, sol, 0)


def test_centered_field():
    V = PowerSeries(1, 1, {(0,): [-1.0], (2,): [1.0]})
    W = centered_field(V, [1.0])
    assert {I: b[0] for I, b in W.coeffs.items()} == {(1,): 2.0, (2,): 1.0}
    with pytest.raises(NotCentered):
        centered_field(V, [0.5])


def test_load_field_roundtrip(tmp_path):
    field = decoupled_system()
    cover_path = tmp_path / "cover.json"
    fields_path = tmp_path / "fields.json"
    cover_path.write_text(json.dumps(cover_to_dict(field.cover)))
    fields_path.write_text(json.dumps(field_to_dict(field)))
    loaded = load_field(str(cover_path), str(fields_path))
    assert loaded.equilibrium.spectrum.rates.tolist() == [-1.0, -2.0]
    trace = trace_flow(loaded, [1.0, 2.0], 1.0)
    assert len(trace.switches) == 1


def test_write_trace(tmp_path):
    trace = trace_flow(onedim_system(), [1.0], 2.0)
    csv_path, json_path = write_trace(trace, str(tmp_path / "out"))
    with open(csv_path) as f:
        lines = f.read().splitlines()
    assert lines[0] == "t,x1,cell"
    assert len(lines) == len(trace.times) + 1
    with open(json_path) as f:
        payload = json.load(f)
    assert payload["status"] == "t_end"
    assert [(s["from"], s["to"]) for s in payload["switches"]] == [(1, 0)]
