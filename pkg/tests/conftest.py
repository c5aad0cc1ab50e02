def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when in ("call", "setup"):
                if rep.when == "setup" and rep.passed:
                    continue
                lines.append((props["criterion"], "PASS" if rep.passed else "FAIL", props.get("label", "")))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num, status, label in sorted(lines):
            terminalreporter.write_line("criterion %d: %s  %s" % (num, status, label))
