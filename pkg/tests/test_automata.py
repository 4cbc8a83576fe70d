import numpy as np
import pytest

from decmon.automata import (
    MonitorAutomaton, ProtocolAutomaton, build_monitor, check_monitorable, split_transitions
)
from decmon.automata._implicants import cube_key, minimal_cover, prime_implicants
from decmon.core import compile_property
from decmon.ltl import AtomicProposition, UnknownPropositionError, Verdict, desugar, parse_ap_table, parse_formula

LEADER_UNTIL = "!a U (a U (b & c))"
ABC_APS = parse_ap_table("a=0,b=1,c=2")


@pytest.fixture(scope="module")
def leader_until():
    pa, monitorability = compile_property(LEADER_UNTIL, ABC_APS)
    return pa, monitorability


def conjuncts(pa):
    return [(tr.source, tr.target, str(tr)) for tr in pa.transitions]


class TestImplicants:
    def test_primes_of_a_and_not_b_and_c(self):
        # letters over (a, b, c); f = a & !(b & c)
        table = np.array([bool(l & 1) and not ((l >> 1) & 1 and (l >> 2) & 1) for l in range(8)])
        primes = prime_implicants(table)
        assert primes == [(0b011, 0b001), (0b101, 0b001)]
        assert minimal_cover(table) == primes

    def test_constant_functions(self):
        assert minimal_cover(np.zeros(4, dtype=np.bool_)) == []
        assert minimal_cover(np.ones(4, dtype=np.bool_)) == [(0, 0)]

    def test_cover_is_exact_and_minimal_for_xor(self):
        table = np.array([False, True, True, False])
        cover = minimal_cover(table)
        assert len(cover) == 2
        letters = np.arange(4)
        covered = np.zeros(4, dtype=np.bool_)
        for mask, value in cover:
            covered |= (letters & mask) == value
        assert np.array_equal(covered, table)

    def test_cube_key(self):
        assert cube_key((0b011, 0b001), 3) == (0, 1, 2)

    def test_table_length_must_be_a_power_of_two(self):
        with pytest.raises(ValueError):
            prime_implicants(np.ones(3, dtype=np.bool_))


class TestMonitorAutomaton:
    def test_locations(self, leader_until):
        pa, monitorability = leader_until
        assert pa.num_locations == 4
        assert pa.labels == (Verdict.UNKNOWN, Verdict.UNKNOWN, Verdict.TOP, Verdict.BOTTOM)
        assert [pa.location_name(loc) for loc in range(4)] == ["q0", "q1", "q⊤", "q⊥"]
        assert monitorability.monitorable
        assert monitorability.reachable_verdicts == {Verdict.TOP, Verdict.BOTTOM}
        assert monitorability.dead_locations == ()

    def test_runs(self, leader_until):
        m = leader_until[0].monitor
        a, ab, abc, b = (m.letter(v) for v in ({"a": True}, {"a": True, "b": True},
                                                {"a": True, "b": True, "c": True}, {"b": True}))
        assert m.run([]) == 0
        assert m.run([0, 0, 0]) == 0
        assert m.run([a]) == 1
        assert m.verdict([a, ab, abc]) is Verdict.TOP
        assert m.verdict([a, ab, b]) is Verdict.BOTTOM
        assert m.verdict([abc]) is Verdict.TOP
        # terminal locations only loop
        assert set(m.delta[2].tolist()) == {2}
        assert set(m.delta[3].tolist()) == {3}

    def test_phi2_with_two_followers(self):
        pa, _ = compile_property("a U (b1 & b2)", parse_ap_table("a=0,b1=1,b2=2"))
        assert pa.num_locations == 3
        assert sorted(label.value for label in pa.labels) == sorted(["?", "⊤", "⊥"])

    def test_infinitely_often_is_not_monitorable(self):
        m = build_monitor(desugar(parse_formula("[]<>a")))
        result = check_monitorable(m)
        assert not result.monitorable
        assert result.classification == "non_monitorable"
        assert m.num_locations == 1

    def test_phi4_can_never_be_satisfied(self):
        _, monitorability = compile_property("[](a -> (b U c))", parse_ap_table("a=0,b=1,c=2"))
        assert monitorability.reachable_verdicts == {Verdict.BOTTOM}

    def test_true_gives_a_single_top_location(self):
        m = build_monitor(desugar(parse_formula("true")))
        assert m.labels == (Verdict.TOP,)

    def test_propositions_outside_the_formula_are_allowed(self):
        m = build_monitor(desugar(parse_formula("<>a")), ["a", "z"])
        assert m.num_letters == 4
        assert m.verdict([m.letter({"z": True}), m.letter({"a": True})]) is Verdict.TOP

    def test_unknown_propositions(self):
        with pytest.raises(UnknownPropositionError):
            build_monitor(desugar(parse_formula("a & b")), ["a"])

    def test_delta_shape_is_checked(self):
        with pytest.raises(ValueError):
            MonitorAutomaton(["a"], [Verdict.UNKNOWN], np.zeros((1, 4), dtype=np.int64))


class TestProtocolAutomaton:
    def test_split_into_conjuncts(self, leader_until):
        pa = leader_until[0]
        assert conjuncts(pa) == [
            (0, 1, "a ∧ ¬b"),
            (0, 1, "a ∧ ¬c"),
            (0, 2, "b ∧ c"),
            (1, 2, "b ∧ c"),
            (1, 3, "¬a ∧ ¬b"),
            (1, 3, "¬a ∧ ¬c"),
        ]
        assert [tr.associated_processes for tr in pa.transitions] == [(0, 1), (0, 2), (1, 2), (1, 2), (0, 1), (0, 2)]
        assert pa.num_processes == 3

    def test_first_enabled_prefers_the_lowest_id(self, leader_until):
        pa = leader_until[0]
        m = pa.monitor
        assert pa.first_enabled[0, m.letter({"a": True})] == 0
        assert pa.first_enabled[0, m.letter({"a": True, "c": True})] == 0
        assert pa.first_enabled[0, m.letter({"a": True, "b": True})] == 1
        assert pa.first_enabled[0, m.letter({})] == -1
        assert pa.first_enabled[1, m.letter({"b": True, "c": True})] == 3

    def test_walk(self, leader_until):
        pa = leader_until[0]
        m = pa.monitor
        letters = np.array([0, m.letter({"a": True}), m.letter({"a": True, "b": True}),
                            m.letter({"a": True, "b": True, "c": True})], dtype=np.int64)
        segs, trs, final, overflow = pa.walk(letters)
        assert list(segs) == [1, 3]
        assert list(trs) == [0, 3]
        assert final == 2 and not overflow

    def test_ownership(self, leader_until):
        pa = leader_until[0]
        assert pa.owner("b") == 1
        assert pa.owned_mask(2) == 0b100
        assert pa.owned_propositions(0) == ["a"]

    def test_json_round_trip(self, leader_until):
        pa = leader_until[0]
        loaded = ProtocolAutomaton.from_json(pa.to_json())
        assert conjuncts(loaded) == conjuncts(pa)
        assert loaded.labels == pa.labels
        assert loaded.propositions == pa.propositions
        assert np.array_equal(loaded.first_enabled, pa.first_enabled)

    def test_json_rejects_other_files(self):
        with pytest.raises(ValueError):
            ProtocolAutomaton.from_json('{"format": "something-else"}')

    def test_dot(self, leader_until):
        dot = leader_until[0].to_dot()
        assert dot.startswith("digraph monitor {")
        assert 'label="Tr2: b ∧ c"' in dot
        assert "doublecircle" in dot

    def test_missing_owner(self):
        m = build_monitor(desugar(parse_formula("a U b")))
        with pytest.raises(UnknownPropositionError):
            split_transitions(m, [AtomicProposition("a", 0)])

    def test_constant_guards(self):
        pa, _ = compile_property("X a", parse_ap_table("a=0"))
        constant = [tr for tr in pa.transitions if tr.is_constant]
        assert len(constant) == 1
        assert str(constant[0]) == "true"
        assert constant[0].associated_processes == ()


def random_property(rng, depth, props=("a", "b", "c")):
    """Random formula text over `props`, fully parenthesized."""
    if depth == 0 or rng.random() < 0.3:
        name = props[int(rng.integers(0, len(props)))]
        return name if rng.random() < 0.8 else "!" + name
    kind = int(rng.integers(0, 7))
    if kind < 4:
        operand = random_property(rng, depth - 1, props)
        return "{}({})".format(["!", "X ", "<>", "[]"][kind], operand)
    left, right = random_property(rng, depth - 1, props), random_property(rng, depth - 1, props)
    return "({}) {} ({})".format(left, ["&", "|", "U"][kind - 4], right)


def random_properties(count, seed):
    rng = np.random.default_rng(seed)
    tables = ["a=0,b=1,c=2", "a=0,b=0,c=1", "a=1,b=0,c=1"]
    return [(random_property(rng, 3), tables[idx % len(tables)]) for idx in range(count)]


@pytest.mark.slow
@pytest.mark.parametrize("text, table", random_properties(60, 4242))
class TestSplitProperties:
    def test_monitor_is_deterministic_and_total(self, text, table):
        pa, _ = compile_property(text, parse_ap_table(table))
        m = pa.monitor
        assert m.delta.shape == (m.num_locations, m.num_letters)
        assert ((m.delta >= 0) & (m.delta < m.num_locations)).all()
        for location in range(m.num_locations):
            if m.terminal[location]:
                assert set(m.delta[location].tolist()) == {location}

    def test_split_is_sound_and_covering(self, text, table):
        pa, _ = compile_property(text, parse_ap_table(table))
        m = pa.monitor
        for location in range(m.num_locations):
            for letter in range(m.num_letters):
                enabled = [tr for tr in pa.outgoing[location] if tr.satisfied_by(letter)]
                target = m.step(location, letter)
                # every conjunct that holds leads where the monitor goes; every move is covered by one
                assert {tr.target for tr in enabled} == ({target} if target != location else set())
                expected = min((tr.id for tr in enabled), default=-1)
                assert pa.first_enabled[location, letter] == expected

    def test_associated_processes_own_the_conjunct(self, text, table):
        pa, _ = compile_property(text, parse_ap_table(table))
        for tr in pa.transitions:
            assert tr.source != tr.target
            assert tr.associated_processes == tuple(sorted({pa.owner(name) for name, _ in tr.conjunct}))
