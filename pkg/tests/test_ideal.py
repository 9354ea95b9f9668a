from fractions import Fraction

import pytest

from rde.core import JointDistribution
from rde.errors import InvalidArgumentError
from rde.ideal import dec_ideal, run_ideal
from rde.measures import binary_entropy
from rde.scenarios import get_scenario

H2 = binary_entropy(0.2)


def events_of(traj, kind):
    return [e for e in traj.events if e.kind == kind]


class TestExampleTrajectories:
    def test_three_party_chain(self):
        traj = run_ideal(get_scenario("ex1").dist)
        assert not traj.violations
        acts = events_of(traj, "activate")
        # the weakest party joins once the leader covers the entropy gap
        third = [e for e in acts if e.detail[0] == frozenset({3})]
        assert len(third) == 1
        assert third[0].clock == pytest.approx(1 - H2, abs=1e-9)
        merges = events_of(traj, "merge")
        assert len(merges) == 1
        assert merges[0].detail[0] == frozenset({1, 2, 3})
        assert traj.terminal_rates[1] == pytest.approx(0.5, abs=1e-9)
        assert traj.terminal_rates[2] == pytest.approx(0.5, abs=1e-9)
        assert traj.terminal_rates[3] == pytest.approx(H2 - 0.5, abs=1e-9)
        assert traj.terminal_sum == pytest.approx((1 + 2 * H2) / 2, abs=1e-9)

    def test_pair_merges_first(self):
        traj = run_ideal(get_scenario("ex2").dist)
        assert not traj.violations
        merges = events_of(traj, "merge")
        assert merges[0].detail[0] == frozenset({1, 2})
        assert merges[0].time == pytest.approx(H2, abs=1e-9)
        assert traj.terminal_rates[1] == pytest.approx((1 + 2 * H2) / 2,
                                                       abs=1e-9)
        assert traj.terminal_rates[3] == pytest.approx(H2, abs=1e-9)

    def test_four_party_event_order(self):
        traj = run_ideal(get_scenario("ex3").dist)
        assert not traj.violations
        merges = events_of(traj, "merge")
        assert [sorted(e.detail[0]) for e in merges] == [
            [1, 2], [1, 2, 3], [1, 2, 3, 4]]
        t1, t3, t4 = (e.time for e in merges)
        t2 = max(e.time for e in events_of(traj, "activate"))
        assert t1 < t2 < t3 < t4
        r = traj.breakpoints[-2][2]  # rates at the third merge
        assert (r[1] + r[2] + r[3]) - r[4] == pytest.approx(1 + 2 * H2,
                                                            abs=1e-9)
        assert traj.terminal_sum == pytest.approx(3 + 2 * H2, abs=1e-9)

    def test_identical_pair_merges_immediately(self):
        d = JointDistribution((1, 2), (2, 2),
                              {(0, 0): Fraction(1, 2), (1, 1): Fraction(1, 2)})
        traj = run_ideal(d)
        assert traj.terminal_sum == pytest.approx(0.0, abs=1e-9)

    def test_needs_two_parties(self):
        d = JointDistribution((1,), (2,), {(0,): Fraction(1)})
        with pytest.raises(InvalidArgumentError):
            run_ideal(d)


class TestIdealDecoder:
    def setup_method(self):
        self.d = get_scenario("ex1").dist
        self.parts = [frozenset({i}) for i in (1, 2, 3)]

    def test_no_omniscience_at_low_rates(self):
        rates = {1: 0.1, 2: 0.1, 3: 0.0}
        assert dec_ideal(1, self.parts, self.parts, rates, self.d) is None

    def test_full_union_at_terminal_rates(self):
        rates = {1: 0.5, 2: 0.5, 3: H2 - 0.5}
        got = dec_ideal(1, self.parts, self.parts, rates, self.d)
        assert got == frozenset({1, 2, 3})

    def test_inactive_party_rejected(self):
        rates = {1: 1.0, 2: 1.0, 3: 1.0}
        with pytest.raises(InvalidArgumentError):
            dec_ideal(3, self.parts, self.parts[:2], rates, self.d)


class TestDeterminism:
    def test_repeat_runs_identical(self):
        a = run_ideal(get_scenario("ex3").dist)
        b = run_ideal(get_scenario("ex3").dist)
        assert [(e.time, e.kind, e.detail) for e in a.events] == \
               [(e.time, e.kind, e.detail) for e in b.events]
