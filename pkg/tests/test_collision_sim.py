"""Simulator tests: closed-form agreement, conservation audits, reactions."""

import math

import numpy as np
import pytest

from pflkit import collision_sim as sim
from pflkit import pfl_model as pm
from pflkit import trace_analysis as ta


def elastic_scenario(mu=15.0, v0=0.3, k=75_000.0, skin=None, **kwargs) -> sim.SimScenario:
    return sim.SimScenario(
        reduced_mass=mu,
        initial_velocity=v0,
        body_spring_constant=k,
        skin=skin or pm.SkinModel.none(),
        max_time=kwargs.pop("max_time", 1.0),
        **kwargs,
    )


class TestFrictionCoefficient:
    def test_rig_characterization_value(self):
        assert sim.static_friction_coefficient(3.2, 52.0) == pytest.approx(0.062, abs=0.001)

    def test_zero_force_zero_coefficient(self):
        assert sim.static_friction_coefficient(0.0, 52.0) == 0.0

    def test_plain_ratio(self):
        assert sim.static_friction_coefficient(5.0, 50.0) == pytest.approx(0.1)

    def test_nonpositive_normal_force_rejected(self):
        with pytest.raises(sim.SimError):
            sim.static_friction_coefficient(3.2, 0.0)


class TestContactLaw:
    def test_no_skin_is_body_spring(self):
        force, xs = sim.contact_law(75_000.0, pm.SkinModel.none(), 0.002)
        assert force == pytest.approx(150.0)
        assert xs == 0.0

    def test_series_stiffness_while_cover_compresses(self):
        skin = pm.soft_pad()  # 3 kN/m, 16 mm
        k = 75_000.0
        series = skin.spring_constant * k / (skin.spring_constant + k)
        force, xs = sim.contact_law(k, skin, 0.005)
        assert force == pytest.approx(series * 0.005)
        assert xs == pytest.approx(force / skin.spring_constant)

    def test_continuous_at_flattening(self):
        skin = pm.soft_pad()
        k = 75_000.0
        x_flat = skin.compressible_thickness * (k + skin.spring_constant) / k
        below = sim.contact_law(k, skin, x_flat - 1e-9)[0]
        above = sim.contact_law(k, skin, x_flat + 1e-9)[0]
        assert above - below < 1e-3
        assert sim.contact_law(k, skin, x_flat)[1] == skin.compressible_thickness

    def test_separation_is_force_free(self):
        assert sim.contact_law(75_000.0, pm.soft_pad(), -0.01) == (0.0, 0.0)


class TestElasticAgreement:
    def test_peak_matches_harmonic_closed_form(self):
        for v0 in (0.2, 0.3, 0.5, 0.7):
            result = sim.simulate(elastic_scenario(v0=v0, max_time=0.5))
            analytic = v0 * math.sqrt(75_000.0 * 15.0)
            assert abs(result.peak_force - analytic) / analytic < 0.005

    def test_peak_matches_cover_model_above_threshold(self):
        skin = pm.soft_pad()
        contact = pm.ContactScenario(
            pm.QUASI_STATIC,
            pm.hand_back_region(pm.CONSTRAINED),
            skin,
            pm.ExplicitEffectiveMass(15.0),
        )
        for v0 in (0.25, 0.3, 0.4):
            result = sim.simulate(elastic_scenario(v0=v0, skin=skin, max_time=0.5))
            analytic = pm.predicted_impact_force(contact, v0, pm.MOD_QUASISTATIC)
            assert abs(result.peak_force - analytic) / analytic < 0.01

    def test_below_absorption_threshold_stays_in_cover_stage(self):
        skin = pm.soft_pad()
        threshold = math.sqrt(skin.energy_term / 15.0)  # 0.226 m/s
        result = sim.simulate(elastic_scenario(v0=0.8 * threshold, skin=skin, max_time=0.5))
        assert result.peak_force <= skin.spring_constant * skin.compressible_thickness
        assert result.skin_compression.max() < skin.compressible_thickness

    def test_energy_conserved_during_contact(self):
        result = sim.simulate(elastic_scenario(max_time=0.5))
        assert result.max_energy_drift < 1e-3
        # independent audit from the output log
        e0 = 0.5 * 15.0 * 0.3**2
        energy = (
            0.5 * 15.0 * result.velocity**2
            + 0.5 * 75_000.0 * np.maximum(result.position, 0.0) ** 2
        )
        assert np.abs(energy - e0).max() / e0 < 1e-3

    def test_momentum_audit_at_rest(self):
        for mu, v0 in ((15.0, 0.3), (10.0, 0.5), (4.0, 0.25)):
            result = sim.simulate(elastic_scenario(mu=mu, v0=v0, max_time=0.5))
            assert result.impulse_to_rest is not None
            assert abs(result.impulse_to_rest - mu * v0) / (mu * v0) < 0.01

    def test_bounce_classifies_type1(self):
        result = sim.simulate(elastic_scenario(max_time=1.5))
        assert ta.classify(result.trace) is ta.CollisionType.TYPE1


class TestReactions:
    def test_retract_produces_type1(self):
        scenario = elastic_scenario(
            mu=10.0, skin=pm.soft_pad(), reaction=sim.retract_preset(), max_time=2.0
        )
        result = sim.simulate(scenario)
        assert ta.classify(result.trace) is ta.CollisionType.TYPE1

    def test_retract_with_zero_delay_still_type1(self):
        # detection above the device threshold, else the force never tops
        # 20 N and the device has nothing to record
        scenario = elastic_scenario(
            mu=10.0,
            skin=pm.soft_pad(),
            reaction=sim.retract_preset(
                reaction_delay=0.0,
                detection_force=30.0,
                detection_source=sim.DETECT_ROBOT,
            ),
            max_time=2.0,
        )
        assert ta.classify(sim.simulate(scenario).trace) is ta.CollisionType.TYPE1

    def test_brake_hold_produces_type3(self):
        scenario = elastic_scenario(
            mu=10.0, skin=pm.soft_pad(), reaction=sim.brake_hold_preset(), max_time=2.0
        )
        result = sim.simulate(scenario)
        assert ta.classify(result.trace) is ta.CollisionType.TYPE3
        # clamping force settles at the spring force of the held position
        assert result.force[-1] == pytest.approx(result.force[-100], rel=1e-9)

    def test_brake_oscillate_produces_type2(self):
        scenario = elastic_scenario(
            mu=10.0, skin=pm.soft_pad(), reaction=sim.brake_oscillate_preset(), max_time=2.0
        )
        result = sim.simulate(scenario)
        assert ta.classify(result.trace) is ta.CollisionType.TYPE2

    def test_detection_precedes_reaction_by_the_delay(self):
        reaction = sim.brake_hold_preset(reaction_delay=0.02)
        result = sim.simulate(
            elastic_scenario(mu=10.0, skin=pm.soft_pad(), reaction=reaction, max_time=2.0)
        )
        assert result.detection_time is not None
        assert result.reaction_start_time == pytest.approx(
            result.detection_time + 0.02, abs=1e-6
        )
        # force at detection has just crossed the threshold
        det_idx = int(round(result.detection_time * 1000.0))
        assert result.force[det_idx] >= reaction.detection_force * 0.9


class TestFriction:
    def test_friction_lowers_peak_and_dissipates(self):
        plain = sim.simulate(elastic_scenario(mu=5.3, v0=0.4, max_time=0.5))
        rubbed = sim.simulate(
            elastic_scenario(
                mu=5.3,
                v0=0.4,
                max_time=0.5,
                friction=sim.Friction(force=3.2, normal_force=52.0),
            )
        )
        assert rubbed.peak_force < plain.peak_force
        assert rubbed.impulse_to_rest < plain.impulse_to_rest

    def test_friction_coefficient_property(self):
        friction = sim.Friction(force=3.2, normal_force=52.0)
        assert friction.coefficient == pytest.approx(0.062, abs=0.001)


class TestMonotonicity:
    def test_peak_nondecreasing_in_velocity(self):
        peaks = [
            sim.simulate(elastic_scenario(v0=v, skin=pm.soft_pad(), max_time=0.5)).peak_force
            for v in (0.25, 0.3, 0.35, 0.4, 0.5)
        ]
        assert all(a <= b + 1e-9 for a, b in zip(peaks, peaks[1:]))

    def test_peak_nonincreasing_in_cover_thickness(self):
        def with_thickness(ds):
            skin = pm.SkinModel(spring_constant=3000.0, compressible_thickness=ds)
            return sim.simulate(elastic_scenario(v0=0.4, skin=skin, max_time=0.5)).peak_force

        peaks = [with_thickness(ds) for ds in (0.0, 0.008, 0.016, 0.024)]
        assert all(a >= b - 1e-9 for a, b in zip(peaks, peaks[1:]))

    def test_peak_nonincreasing_as_series_softens_below_flattening(self):
        # in the series regime a softer cover lowers the stack stiffness
        def with_stiffness(ks):
            skin = pm.SkinModel(spring_constant=ks, compressible_thickness=0.05)
            return sim.simulate(elastic_scenario(v0=0.2, skin=skin, max_time=0.5)).peak_force

        peaks = [with_stiffness(ks) for ks in (6000.0, 3000.0, 1500.0, 750.0)]
        assert all(a >= b - 1e-9 for a, b in zip(peaks, peaks[1:]))


class TestPlumbing:
    def test_deterministic(self):
        a = sim.simulate(elastic_scenario(max_time=0.5))
        b = sim.simulate(elastic_scenario(max_time=0.5))
        assert np.array_equal(a.force, b.force)
        assert np.array_equal(a.trace.samples, b.trace.samples)

    def test_trace_follows_trigger_convention(self):
        result = sim.simulate(elastic_scenario(max_time=0.5))
        assert result.trace.samples[0] >= 20.0
        assert result.force.max() == pytest.approx(result.trace.samples.max(), rel=1e-6)

    def test_zero_velocity_yields_empty_contact(self):
        result = sim.simulate(elastic_scenario(v0=0.0, max_time=0.5))
        assert len(result.trace) == 0
        assert result.peak_force == 0.0

    def test_unstable_timestep_aborts(self):
        scenario = sim.SimScenario(
            reduced_mass=1.0,
            initial_velocity=0.3,
            body_spring_constant=75_000.0,
            timestep=1e-3,
            output_rate=1000.0,
            max_time=0.5,
        )
        with pytest.raises(sim.SimulationUnstableError):
            sim.simulate(scenario)

    def test_incommensurate_output_rate_rejected(self):
        with pytest.raises(sim.SimError):
            sim.SimScenario(
                reduced_mass=10.0,
                initial_velocity=0.3,
                body_spring_constant=75_000.0,
                timestep=3e-5,
                output_rate=1000.0,
            )

    def test_reaction_validation(self):
        with pytest.raises(sim.SimError):
            sim.ReactionModel(kind="retract", retract_speed=0.0)
        with pytest.raises(sim.SimError):
            sim.ReactionModel(kind="brake_hold", deceleration=0.0)
        with pytest.raises(sim.SimError):
            sim.ReactionModel(
                kind="brake_oscillate",
                deceleration=5.0,
                oscillation_frequency=8.0,
                oscillation_damping=1.5,
            )
        with pytest.raises(sim.SimError):
            sim.ReactionModel(kind="spin")

    def test_log_arrays_share_length_and_rate(self):
        result = sim.simulate(elastic_scenario(max_time=0.5))
        n = result.time.size
        assert n == int(0.5 * 1000.0) + 1
        for arr in (result.force, result.position, result.velocity, result.skin_compression):
            assert arr.size == n
