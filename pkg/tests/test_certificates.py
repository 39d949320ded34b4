import random
from fractions import Fraction as F

import pytest

from reachcert import (FarkasCertificate, PropertyFalseError, PropertySpec,
                       RepairError, StrictInfeasibleError,
                       build_farkas_system, frequencies_from_scheduler,
                       generate_certificate, induced_dtmc, parse_certificate,
                       parse_model, reach_probabilities, reach_value,
                       repair_certificate, scheduler_from_y,
                       serialize_certificate, verify_certificate)
from reachcert.certificates import md_scheduler
from reachcert.linsys import optimal_values_and_policy

from conftest import small_corpus


def test_generate_z_min_d1(d1):
    cert = generate_certificate(d1, PropertySpec("min", ">=", F(2, 5)))
    assert cert.kind == "z"
    assert cert.vector == (F(1, 2), F(2, 5))
    assert verify_certificate(d1, cert).ok


def test_generate_y_max_d1(d1):
    cert = generate_certificate(d1, PropertySpec("max", ">=", F(1, 2)))
    assert cert.kind == "y"
    assert cert.vector == (F(1), F(1, 2))
    fs = build_farkas_system(d1)
    assert fs.dot_b(cert.vector) == F(3, 10) + F(1, 5)


def test_generate_single_state_full_probability():
    m = parse_model("dtmc\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n0 - 1 1\n")
    cert = generate_certificate(m, PropertySpec("min", ">=", F(1)))
    assert cert.vector == (F(1),)


def test_generate_strict_needs_slack(d1):
    with pytest.raises(StrictInfeasibleError):
        generate_certificate(d1, PropertySpec("min", ">", F(1, 2)))
    cert = generate_certificate(d1, PropertySpec("min", ">", F(2, 5)))
    assert verify_certificate(d1, cert).ok


def test_generate_property_false(d1):
    with pytest.raises(PropertyFalseError):
        generate_certificate(d1, PropertySpec("min", ">=", F(3, 5)))
    with pytest.raises(PropertyFalseError):
        generate_certificate(d1, PropertySpec("max", "<", F(1, 2)))


def test_verify_accepts_tight_example(d1):
    cert = FarkasCertificate(PropertySpec("min", ">=", F(2, 5)), "z",
                             (F(1, 2), F(2, 5)))
    assert verify_certificate(d1, cert).ok


def test_verify_rejects_inflated_row(d1):
    cert = FarkasCertificate(PropertySpec("min", ">=", F(2, 5)), "z",
                             (F(1, 2) + F(1, 100), F(2, 5)))
    report = verify_certificate(d1, cert)
    assert not report.ok
    assert report.violations == ("row (0,-): 31/100 > 3/10",)


def test_verify_zero_y_at_lambda_zero(d1):
    cert = FarkasCertificate(PropertySpec("max", ">=", F(0)), "y",
                             (F(0), F(0)))
    assert verify_certificate(d1, cert).ok


def test_verify_dimension_mismatch(d1):
    cert = FarkasCertificate(PropertySpec("min", ">=", F(0)), "z", (F(0),))
    with pytest.raises(ValueError, match="dimension mismatch"):
        verify_certificate(d1, cert)


def test_repair_spec_example(d1):
    cert = FarkasCertificate(PropertySpec("min", ">=", F(2, 5)), "z",
                             (F(1, 2), F(2, 5)))
    repaired = repair_certificate(d1, cert, F(1, 100))
    assert repaired.vector == (F(49, 100), F(39, 100))
    assert verify_certificate(d1, repaired).ok


def test_repair_insufficient_margin(d1):
    cert = FarkasCertificate(PropertySpec("min", ">=", F(1, 2)), "z",
                             (F(1, 2), F(2, 5)))
    with pytest.raises(RepairError, match="threshold side"):
        repair_certificate(d1, cert, F(1, 100))


def test_repair_zero_margin_is_identity(d1):
    cert = FarkasCertificate(PropertySpec("min", ">=", F(2, 5)), "z",
                             (F(1, 2), F(2, 5)))
    assert repair_certificate(d1, cert, F(0)).vector == cert.vector


def test_repair_scales_y(d1):
    cert = generate_certificate(d1, PropertySpec("max", ">=", F(1, 4)))
    repaired = repair_certificate(d1, cert, F(1, 100))
    assert repaired.vector == tuple(F(99, 100) * v for v in cert.vector)


def test_float_mode_pipeline(d1):
    for prop in (PropertySpec("min", ">=", F(1, 3)),
                 PropertySpec("max", ">=", F(1, 3)),
                 PropertySpec("min", "<=", F(2, 3)),
                 PropertySpec("max", "<=", F(2, 3))):
        cert = generate_certificate(d1, prop, mode="float")
        assert verify_certificate(d1, cert).ok


def test_scheduler_from_y_normalizes():
    text = ("mdp\nstates: 3\ninitial: 0\ngoal: 1\nfail: 2\n"
            "0 a 1 1\n0 b 2 1\n")
    m = parse_model(text)
    sched = scheduler_from_y(m, (F(3), F(1)))
    assert sched.dists[0] == (("a", F(3, 4)), ("b", F(1, 4)))
    # zero vector falls back to the first enabled action
    sched0 = scheduler_from_y(m, (F(0), F(0)))
    assert sched0.dists[0] == (("a", F(1)),)
    with pytest.raises(ValueError, match="negative"):
        scheduler_from_y(m, (F(-1), F(0)))


def test_frequencies_identity_on_d1(d1):
    sched = md_scheduler(d1, {0: 0, 1: 0})
    assert frequencies_from_scheduler(d1, sched) == (F(1), F(1, 2))


def test_frequencies_zero_for_unreached_state():
    text = ("mdp\nstates: 4\ninitial: 0\ngoal: 2\nfail: 3\n"
            "0 a 2 1\n0 b 1 1\n1 a 2 1\n")
    m = parse_model(text)
    y = frequencies_from_scheduler(m, md_scheduler(m, {0: 0, 1: 0}))
    pairs = m.pairs()
    assert y[pairs.index((1, "a"))] == 0
    assert y[pairs.index((0, "a"))] == 1


def test_frequency_duality_on_random_mdps():
    rng = random.Random(4)
    for m in small_corpus(40, max_states=10, max_actions=3, seed_base=41):
        fs = build_farkas_system(m)
        policy = {s: rng.randrange(len(m.actions[s])) for s in m.s_states()}
        sched = md_scheduler(m, policy)
        y = frequencies_from_scheduler(m, sched)
        assert fs.mult_y(y) == fs.delta0
        induced = induced_dtmc(m, sched.as_mapping())
        assert fs.dot_b(y) == reach_value(induced, "min")


def test_scheduler_round_trip_on_positive_frequencies():
    rng = random.Random(6)
    for m in small_corpus(20, max_states=8, max_actions=3, seed_base=51):
        policy = {s: rng.randrange(len(m.actions[s])) for s in m.s_states()}
        sched = md_scheduler(m, policy)
        y = frequencies_from_scheduler(m, sched)
        back = scheduler_from_y(m, y)
        freq = {s: f for (s, _), f in zip(m.pairs(), y)}
        pair_mass = {}
        for (s, a), f in zip(m.pairs(), y):
            pair_mass[s] = pair_mass.get(s, F(0)) + f
        for s in m.s_states():
            if pair_mass[s] > 0:
                assert back.dists[s] == sched.dists[s]


def test_certificate_file_round_trip(d1):
    fs = build_farkas_system(d1)
    for prop in (PropertySpec("min", ">=", F(2, 5)),
                 PropertySpec("max", ">=", F(1, 2)),
                 PropertySpec("min", "<=", F(1, 2)),
                 PropertySpec("max", "<=", F(3, 4))):
        cert = generate_certificate(d1, prop)
        text = serialize_certificate(cert)
        back = parse_certificate(text, z_dim=fs.num_cols, y_dim=fs.num_rows)
        assert back == cert


def test_certificate_file_omits_zeros():
    text = ("farkas-certificate\nproperty: max ge 0\nkind: y\n")
    cert = parse_certificate(text, z_dim=2, y_dim=3)
    assert cert.vector == (F(0), F(0), F(0))


def test_soundness_and_completeness_sample(corpus_small):
    # the full 200-model sweep lives in the acceptance suite
    rng = random.Random(8)
    for m in corpus_small[:15]:
        for direction in ("min", "max"):
            value = reach_value(m, direction)
            for relation in (">=", ">", "<=", "<"):
                lam = F(rng.randint(0, 4), 4)
                prop = PropertySpec(direction, relation, lam)
                holds = prop.holds_for(value)
                if holds:
                    cert = generate_certificate(m, prop)
                    assert verify_certificate(m, cert).ok
                else:
                    with pytest.raises(PropertyFalseError):
                        generate_certificate(m, prop)
