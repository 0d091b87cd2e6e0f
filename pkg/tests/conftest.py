import itertools

from tictoc import PolicyConfig


def small(organization="TicToc", cache=1 << 10, ratio=16, l3=128, ways=8, mdc=4, **kw):
    """A tiny system: everything fits in a fraction of a second."""
    return PolicyConfig(organization=organization, cache_lines=cache, memory_lines=cache * ratio,
                        l3_lines=l3, l3_ways=ways, metadata_cache_entries=mdc, **kw)


def lattice():
    """Every legal (organization, dcd, pdm, bypass) combination, as kwargs."""
    out = [dict(organization=o) for o in ("NoCache", "IdealSram", "Tic", "Toc")]
    out.append(dict(organization="Tic", bypass="Bypass90"))
    for dcd, pdm, bypass in itertools.product((False, True), (False, True),
                                              ("None", "Bypass90", "WriteAllocate",
                                               "PreemptiveWriteAllocate")):
        out.append(dict(organization="TicToc", dcd_enabled=dcd, pdm_enabled=pdm, bypass=bypass))
    return out


LATTICE = lattice()


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, after the normal report."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], outcome.upper()[:4], props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, verdict, detail in sorted(lines):
            terminalreporter.write_line(f"criterion {num}: {verdict}  {detail}")
