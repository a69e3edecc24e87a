"""Construction guards, sizes, equality, and head unfolding of terms."""

import pytest

from chorex import cc, sp


class TestBehaviourBasics:
    def test_sizes_count_constructor_nodes(self):
        b = sp.Send("q", "e", sp.Receive("q", "x", sp.NIL))
        assert b.size == 3  # send + receive + nil
        c = sp.Cond("e", b, sp.NIL)
        assert c.size == 1 + 3 + 1

    def test_offer_branches_sort_by_label(self):
        o1 = sp.Offer("p", [("b", sp.NIL), ("a", sp.NIL)])
        o2 = sp.Offer("p", {"a": sp.NIL, "b": sp.NIL})
        assert o1 == o2
        assert hash(o1) == hash(o2)
        assert [l for l, _ in o1.branches] == ["a", "b"]

    def test_offer_rejects_duplicates_and_empty(self):
        with pytest.raises(ValueError, match="duplicate branch labels"):
            sp.Offer("p", [("a", sp.NIL), ("a", sp.NIL)])
        with pytest.raises(ValueError, match="at least one branch"):
            sp.Offer("p", [])

    def test_offer_branch_lookup(self):
        o = sp.Offer("p", {"go": sp.Call("X"), "halt": sp.NIL})
        assert o.branch("go") == sp.Call("X")
        assert o.has_label("halt")
        assert not o.has_label("other")
        with pytest.raises(KeyError):
            o.branch("other")

    def test_structural_equality_and_hash(self):
        a = sp.Send("q", "e", sp.Send("q", "f", sp.NIL))
        b = sp.Send("q", "e", sp.Send("q", "f", sp.NIL))
        assert a is not b and a == b and hash(a) == hash(b)
        assert a != sp.Send("q", "e", sp.NIL)
        assert sp.Call("X") != sp.Call("Y")

    def test_mentioned_processes(self):
        b = sp.Cond(
            "e",
            sp.Send("q", "v", sp.NIL),
            sp.Offer("r", {"l": sp.Receive("s", "x", sp.NIL)}),
        )
        assert sp.mentioned_processes(b) == frozenset({"q", "r", "s"})


class TestProcessTerm:
    def test_head_behaviour_chases_calls(self):
        body = sp.Send("q", "e", sp.Call("X"))
        t = sp.ProcessTerm({"X": sp.Call("Y"), "Y": body}, sp.Call("X"))
        assert t.head_behaviour() == body
        assert t.is_live()

    def test_head_behaviour_rejects_bare_call_cycles(self):
        t = sp.ProcessTerm({"X": sp.Call("X")}, sp.Call("X"))
        with pytest.raises(AssertionError, match="unguarded recursion"):
            t.head_behaviour()

    def test_terminated_term_is_not_live(self):
        assert not sp.TERMINATED.is_live()
        assert sp.ProcessTerm({"X": sp.NIL}, sp.Call("X")).is_live() is False

    def test_with_main_keeps_procedures(self):
        t = sp.ProcessTerm({"X": sp.NIL}, sp.Send("q", "e", sp.NIL))
        t2 = t.with_main(sp.NIL)
        assert t2.procedures == t.procedures
        assert t2.main == sp.NIL
        assert t.with_main(t.main) is t

    def test_size_sums_main_and_procedures(self):
        t = sp.ProcessTerm(
            {"X": sp.Send("q", "e", sp.NIL)}, sp.Receive("q", "x", sp.Call("X"))
        )
        assert t.size == 2 + 2  # procedure body + main

    def test_duplicate_procedure_names_rejected(self):
        with pytest.raises(ValueError, match="duplicate procedure"):
            sp.ProcessTerm([("X", sp.NIL), ("X", sp.NIL)], sp.NIL)


class TestNetwork:
    def test_networks_sort_names_and_compare(self):
        a = sp.Network({"q": sp.TERMINATED, "p": sp.TERMINATED})
        b = sp.Network({"p": sp.TERMINATED, "q": sp.TERMINATED})
        assert a == b and hash(a) == hash(b)
        assert list(a.names()) == ["p", "q"]

    def test_empty_network_rejected(self):
        with pytest.raises(ValueError, match="at least one process"):
            sp.Network({})

    def test_replace_and_restrict(self):
        t = sp.ProcessTerm({}, sp.Send("q", "e", sp.NIL))
        n = sp.Network({"p": t, "q": sp.TERMINATED})
        n2 = n.replace({"p": sp.TERMINATED})
        assert n2["p"] == sp.TERMINATED
        assert n["p"] == t  # original untouched
        assert set(n.restrict(["q"]).names()) == {"q"}


class TestChoreographyTerms:
    def test_com_and_sel_reject_self_interaction(self):
        with pytest.raises(ValueError, match="self-communication"):
            cc.Com("p", "e", "p", "x", cc.NIL)
        with pytest.raises(ValueError, match="self-selection"):
            cc.Sel("p", "p", "l", cc.NIL)

    def test_bare_call_procedure_bodies_rejected(self):
        with pytest.raises(ValueError, match="guarded"):
            cc.Choreography({"X": cc.Call("Y"), "Y": cc.NIL}, cc.NIL)

    def test_body_sizes(self):
        body = cc.Com("p", "e", "q", "x", cc.Sel("p", "q", "l", cc.NIL))
        assert body.size == 3
        assert cc.Cond("p", "e", body, cc.DEADLOCK).size == 1 + 3 + 1

    def test_process_names_skip_expressions(self):
        body = cc.Cond("p", "q", cc.Com("r", "e", "s", "x", cc.NIL), cc.NIL)
        # The guard expression "q" is opaque text, not a process.
        assert cc.body_process_names(body) == frozenset({"p", "r", "s"})

    def test_program_requires_disjoint_components(self):
        c1 = cc.Choreography({}, cc.Com("p", "e", "q", "x", cc.NIL))
        c2 = cc.Choreography({}, cc.Com("q", "e", "r", "x", cc.NIL))
        with pytest.raises(ValueError, match="share process names"):
            cc.Program([c1, c2])
        ok = cc.Choreography({}, cc.Com("r", "e", "s", "x", cc.NIL))
        assert len(cc.Program([c1, ok]).components) == 2

    def test_empty_program_rejected(self):
        with pytest.raises(ValueError):
            cc.Program([])

    def test_equality_and_repr(self):
        a = cc.Choreography({"X": cc.Com("p", "e", "q", "x", cc.Call("X"))}, cc.Call("X"))
        b = cc.Choreography({"X": cc.Com("p", "e", "q", "x", cc.Call("X"))}, cc.Call("X"))
        assert a == b and hash(a) == hash(b)
        assert "Choreography" in repr(a)
