"""Small scenario variants shared by the I/O tests."""

from graspcbf.config import canonical_text

FAST_FAIL_WORKSPACE = 'workspace = [-0.02, 0.02, -1.59, -1.55]'


def fast_failure_text():
    """Canonical scenario with a contact box so small that the unfiltered
    controller rolls a fingertip out of it within a few hundred steps."""
    text = canonical_text()
    return text.replace('workspace = ["-pi/2", "pi/2", "-pi", 0.0]', FAST_FAIL_WORKSPACE)


# acceptance verdicts, printed in the terminal summary by conftest
ACCEPTANCE = {}


def verdict(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return ok
