"""Structural validation and guardedness checking.

Violating networks are built directly from terms because the parser
refuses to produce most of these shapes.
"""

from chorex import sp
from chorex.wellformed import CheckReport, check_guardedness, check_well_formed


def _net(**processes):
    return sp.Network(processes)


def test_clean_network_passes_both_checks(signon_net):
    assert check_well_formed(signon_net).ok
    assert check_guardedness(signon_net).ok


def test_self_communication_is_flagged():
    report = check_well_formed(
        _net(p=sp.ProcessTerm({}, sp.Send("p", "e", sp.NIL)))
    )
    assert not report.ok
    assert report.violations == [
        ("self-communication", "p/main", "process p communicates with itself")
    ]


def test_self_offer_in_procedure_is_flagged():
    term = sp.ProcessTerm({"X": sp.Offer("p", {"l": sp.NIL})}, sp.Call("X"))
    report = check_well_formed(_net(p=term))
    assert ("self-communication", "p/def X", "process p communicates with itself") in report.violations


def test_undefined_call_is_flagged():
    report = check_well_formed(_net(p=sp.ProcessTerm({}, sp.Call("X"))))
    assert report.violations == [
        ("unresolved-call", "p/main", "call to undefined procedure X")
    ]


def test_every_violation_is_reported_not_just_the_first():
    term = sp.ProcessTerm({}, sp.Send("p", "e", sp.Call("Y")))
    report = check_well_formed(_net(p=term))
    kinds = sorted(kind for kind, _, _ in report.violations)
    assert kinds == ["self-communication", "unresolved-call"]


class TestGuardedness:
    def test_direct_bare_self_call(self):
        term = sp.ProcessTerm({"X": sp.Call("X")}, sp.Call("X"))
        report = check_guardedness(_net(p=term))
        assert report.violations == [
            ("unguarded-recursion", "p/def X", "procedure X unfolds to a bare self-call")
        ]

    def test_mutual_bare_cycle(self):
        term = sp.ProcessTerm({"X": sp.Call("Y"), "Y": sp.Call("X")}, sp.Call("X"))
        report = check_guardedness(_net(p=term))
        assert not report.ok
        assert {where for _, where, _ in report.violations} == {"p/def X", "p/def Y"}

    def test_guarded_mutual_recursion_is_fine(self):
        term = sp.ProcessTerm(
            {"X": sp.Call("Y"), "Y": sp.Send("q", "e", sp.Call("X"))},
            sp.Call("X"),
        )
        assert check_guardedness(_net(p=term)).ok

    def test_unreachable_bad_procedure_is_ignored(self):
        # Z is a bare self-call but nothing ever invokes it.
        term = sp.ProcessTerm({"Z": sp.Call("Z")}, sp.Send("q", "e", sp.NIL))
        assert check_guardedness(_net(p=term)).ok


def test_report_json_shape():
    report = CheckReport([("kind", "p/main", "something happened")])
    assert report.to_json() == [
        {"kind": "kind", "where": "p/main", "description": "something happened"}
    ]
    assert CheckReport().ok
    assert "ok=True" in repr(CheckReport())
