import numpy as np

from untelegraph.linalg import RngStream, sample_haar_batch


def haar_keys(dim, count, seed):
    return sample_haar_batch(dim, [RngStream(seed, i) for i in range(count)])


def sample_mean(values):
    values = np.asarray(values, dtype=float)
    return values.mean(), values.std(ddof=1) / np.sqrt(values.size)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
