import numpy as np
import pytest

from brakkelab.core.errors import NegativeSample, NonPositiveScale, TimeAfterCenter, WindowOutOfRange
from brakkelab.core.flow import FlowTrajectory, evolve
from brakkelab.core.gaussian import (
    EntropySeeds,
    KernelCenter,
    area_ratio_sup,
    brakke_cutoff,
    check_area_entropy_equivalence,
    entropy_along,
    entropy_growth_check,
    entropy_search,
    f_functional,
    gronwall_bound,
    heat_kernel,
    local_area_bound_check,
    monotonicity_ledger,
    weak_form_check,
    weighted_growth_check,
)
from brakkelab.core.generators import capsule, closed_box, flat_patch, icosphere, parallel_sheets, two_spheres
from brakkelab.core.mesh import translate
from brakkelab.core.schemas import ConstantForce, StepPolicy, ZeroForce

FOUR_OVER_E = 4.0 / np.e


def test_heat_kernel_normalization():
    center = KernelCenter.at([1.0, 2.0, 3.0], 1.0)
    assert heat_kernel(center, [1.0, 2.0, 3.0], 1.0 - 1.0 / (4.0 * np.pi)) == pytest.approx(1.0)
    assert heat_kernel(KernelCenter.at([0, 0, 0], 1.0), [0, 0, 0], 0.0) == pytest.approx(1.0 / (4.0 * np.pi))


def test_heat_kernel_decays_with_distance():
    center = KernelCenter.at([0.0, 0.0, 0.0], 1.0)
    values = heat_kernel(center, [[0.0, 0.0, 0.0], [0.5, 0.0, 0.0], [1.0, 0.0, 0.0]], 0.0)
    assert np.all(np.diff(values) < 0)


def test_heat_kernel_after_center_time():
    with pytest.raises(TimeAfterCenter):
        heat_kernel(KernelCenter.at([0, 0, 0], 1.0), [0, 0, 0], 1.0)


def test_plane_has_unit_gaussian_area():
    mesh = flat_patch(2.0, 100)
    assert f_functional(mesh, [0.0, 0.0, 0.0], 0.01) == pytest.approx(1.0, abs=1e-4)


def test_sphere_gaussian_area_at_center(sphere2_fine):
    assert f_functional(sphere2_fine, [0.0, 0.0, 0.0], 1.0) == pytest.approx(FOUR_OVER_E, rel=1e-2)


def test_sphere_density_at_smooth_point(sphere2_fine):
    # exact value 1 - e^{-40}
    point = sphere2_fine.vertices[0]
    assert f_functional(sphere2_fine, point, 0.1) == pytest.approx(1.0, rel=2e-2)


def test_f_functional_rejects_non_positive_scale(sphere2):
    with pytest.raises(NonPositiveScale):
        f_functional(sphere2, [0.0, 0.0, 0.0], 0.0)


def test_sphere_entropy(sphere2_fine):
    estimate = entropy_search(sphere2_fine)
    assert estimate.value == pytest.approx(FOUR_OVER_E, rel=1e-2)
    assert np.linalg.norm(estimate.y) < 0.1
    assert estimate.tau == pytest.approx(1.0, rel=0.1)


def test_entropy_at_least_plane_density(torus_mesh):
    assert entropy_search(torus_mesh).value >= 0.98


def test_distant_sphere_does_not_add_entropy():
    seeds = EntropySeeds(np.array([[-10.0, 0.0, 0.0], [10.0, 0.0, 0.0]]), np.array([0.5, 1.0, 2.0]))
    pair = entropy_search(two_spheres(2.0, 20.0, 3), seeds).value
    single = entropy_search(translate(icosphere(2.0, 3), (-10.0, 0.0, 0.0)), seeds).value
    assert pair == pytest.approx(FOUR_OVER_E, rel=2e-2)
    assert pair == pytest.approx(single, rel=1e-3)


def test_entropy_search_commutes_with_similarities(sphere2):
    seeds = EntropySeeds(np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), np.array([0.5, 1.0]))
    base = entropy_search(sphere2, seeds).value
    moved = translate(sphere2, (3.0, -1.0, 2.0))
    assert entropy_search(moved, seeds.translated((3.0, -1.0, 2.0))).value == pytest.approx(base, rel=1e-4)


def test_area_ratio_of_sphere(sphere2_fine):
    whole = area_ratio_sup(sphere2_fine)
    local = area_ratio_sup(sphere2_fine, max_radius=0.5)
    # the ball around the centre holding the whole sphere wins
    assert whole.value == pytest.approx(4.0 * np.pi, rel=5e-2)
    assert local.value == pytest.approx(np.pi, rel=5e-2)


def test_area_ratio_of_flat_face():
    box = closed_box(4.0, 16)
    estimate = area_ratio_sup(box, centers=[[0.0, 0.0, 2.0], [0.5, 0.5, 2.0]], max_radius=1.0)
    assert estimate.value == pytest.approx(np.pi, rel=1e-6)


def test_area_ratio_of_close_sheets():
    sheets = parallel_sheets(2.0, 20, gap=0.01)
    estimate = area_ratio_sup(sheets, centers=[[0.0, 0.0, 0.0]], radii=[0.5])
    assert estimate.value == pytest.approx(2.0 * np.pi, rel=1e-2)


def test_area_entropy_equivalence_on_sphere(sphere2):
    outcome = check_area_entropy_equivalence(sphere2)
    assert outcome.passed
    assert 1.0 / 32.0 <= outcome.details["area_over_entropy"] <= 32.0


def test_area_entropy_equivalence_on_thin_capsule():
    mesh = capsule(length=20.0, radius=0.1, n_around=12, n_profile=240)
    outcome = check_area_entropy_equivalence(mesh)
    assert outcome.passed
    assert outcome.details["entropy_lb"] > 1.0


def test_ledger_about_singular_point_is_constant(exact_sphere_traj):
    ledger = monotonicity_ledger(exact_sphere_traj, KernelCenter.at([0.0, 0.0, 0.0], 1.0))
    assert np.ptp(ledger.G) < 1e-10
    assert ledger.G[0] == pytest.approx(FOUR_OVER_E, rel=1e-2)
    assert ledger.D[0] / ledger.G[0] < 1e-2
    assert np.all(ledger.S == 0.0)
    assert ledger.check().passed
    assert ledger.one_sided_check().passed


def test_ledger_about_later_center_decreases(exact_sphere_traj):
    ledger = monotonicity_ledger(exact_sphere_traj, KernelCenter.at([0.0, 0.0, 0.0], 1.5))
    assert np.all(np.diff(ledger.G) < 0)
    assert ledger.check().passed
    assert weighted_growth_check(ledger, 0.0).passed


def test_ledger_rejects_center_inside_span(exact_sphere_traj):
    with pytest.raises(TimeAfterCenter):
        monotonicity_ledger(exact_sphere_traj, KernelCenter.at([0.0, 0.0, 0.0], 0.5))


def test_ledger_rows_carry_running_integrals(exact_sphere_traj):
    ledger = monotonicity_ledger(exact_sphere_traj.before(0.2), KernelCenter.at([0.0, 0.0, 0.0], 1.5))
    rows = ledger.rows()
    assert rows[0]["int_D"] == 0.0
    assert rows[-1]["int_D"] == pytest.approx(float(ledger.int_D[-1]))
    assert set(rows[0]) == {"t", "G", "D", "S", "int_D", "int_S", "D1"}


@pytest.fixture(scope="module")
def gravity_traj():
    force = ConstantForce(vector=[0.0, 0.0, -0.1])
    return evolve(icosphere(2.0, 2), force, StepPolicy(snapshot_every=10), t_end=0.5)


def test_gravity_ledger_has_source_term(gravity_traj):
    ledger = monotonicity_ledger(gravity_traj, KernelCenter.at([0.0, 0.0, 0.0], 1.0))
    # |beta|^2 / 4 is constant, so S is exactly 0.0025 G on the same nodes
    assert np.allclose(ledger.S, 0.0025 * ledger.G, rtol=1e-12, atol=0.0)
    outcome = ledger.check()
    assert outcome.passed
    assert outcome.details["source_integral"] > 0
    assert ledger.one_sided_check().passed
    assert weighted_growth_check(ledger, 0.1).passed


def test_entropy_stays_bounded_along_gravity_flow(gravity_traj):
    picks = [0, len(gravity_traj) // 2, len(gravity_traj) - 1]
    times, values = entropy_along(gravity_traj, picks)
    assert times == pytest.approx([gravity_traj[k].t for k in picks])
    assert values == pytest.approx([FOUR_OVER_E] * 3, rel=2e-2)
    assert entropy_growth_check(times, values, 0.1).passed


def test_entropy_growth_check():
    assert not entropy_growth_check([0.0, 1.0], [1.0, 1.05], 0.0).passed
    assert entropy_growth_check([0.0, 1.0], [1.0, 1.05], 1.0).passed
    assert entropy_growth_check([0.0, 1.0, 2.0], [1.0, 0.99, 0.98], 0.0).passed


def test_local_area_bound_on_static_plane(plane):
    times = np.arange(65) / 64.0
    traj = FlowTrajectory.from_meshes([plane] * len(times), times)
    outcome = local_area_bound_check(traj, [0.0, 0.0, 0.0], 0.5, 0.5)
    assert outcome.passed
    assert outcome.margin == pytest.approx(1.0 - 1.0 / 32.0, abs=1e-9)


def test_local_area_bound_on_shrinking_sphere(exact_sphere_traj):
    outcome = local_area_bound_check(exact_sphere_traj, [1.5, 0.0, 0.0], 1.0, 0.5)
    assert outcome.passed
    assert outcome.details["base_area"] > 0


def test_local_area_window_out_of_range(exact_sphere_traj):
    with pytest.raises(WindowOutOfRange):
        local_area_bound_check(exact_sphere_traj, [0.0, 0.0, 0.0], 1.0, 2.0)


def test_brakke_cutoff_values():
    x0 = [1.0, 0.0, 0.0]
    assert brakke_cutoff(np.array([x0]), 0.0, x0, 0.0, 1.0)[0] == pytest.approx(1.0)
    assert brakke_cutoff(np.array([[2.5, 0.0, 0.0]]), 0.0, x0, 0.0, 1.0)[0] == 0.0


def test_weak_form_on_static_plane(plane):
    times = np.linspace(-0.1, 0.0, 11)
    traj = FlowTrajectory.from_meshes([plane] * len(times), times)
    assert weak_form_check(traj, [0.0, 0.0, 0.0], 0.0, 0.8).passed


def test_weak_form_on_shrinking_sphere(exact_sphere_traj):
    traj = exact_sphere_traj.before(0.205)
    assert weak_form_check(traj, [2.0, 0.0, 0.0], 0.0, 1.0, tol=0.05).passed


def test_weak_form_catches_mass_jump():
    meshes = [flat_patch(2.0, 20, height=0.5), flat_patch(2.0, 20, height=0.0)]
    traj = FlowTrajectory.from_meshes(meshes, [0.0, 0.01])
    assert not weak_form_check(traj, [0.0, 0.0, 0.0], 0.0, 0.8, force=ZeroForce()).passed


def test_gronwall_equality_case():
    t = np.linspace(0.0, 1.0, 201)
    result = gronwall_bound(list(zip(t, np.exp(2.0 * t))), 2.0, 0.0)
    assert result.verdict
    assert result.hypothesis_holds
    assert np.allclose(result.bound, np.exp(2.0 * t), rtol=1e-9, atol=0.0)
    assert np.allclose(gronwall_bound(list(zip(t, 3.0 * np.exp(2.0 * t))), 2.0, 0.5).bound,
                       3.0 * np.exp(2.0 * t), rtol=1e-9, atol=0.0)


def test_gronwall_holds_for_random_subsolutions():
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 1.0, 101)
    C = 1.5
    for _ in range(500):
        f = [rng.uniform(0.5, 2.0)]
        for dt in np.diff(t):
            f.append(f[-1] * (1.0 + dt * C * rng.uniform(-1.0, 1.0)))
        assert gronwall_bound(list(zip(t, f)), C, 0.0).verdict


def test_gronwall_flags_fast_growth():
    t = np.linspace(0.0, 1.0, 51)
    assert not gronwall_bound(list(zip(t, np.exp(3.0 * t))), 1.0, 0.0).verdict


def test_gronwall_rejects_negative_samples():
    with pytest.raises(NegativeSample):
        gronwall_bound([(0.0, 1.0), (1.0, -0.1)], 1.0, 0.0)
