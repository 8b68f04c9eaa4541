import numpy as np
import pytest

from monodeconv import gaussian_noise, latent_model
from monodeconv.harness import simulate


@pytest.fixture(scope="session")
def curved():
    return latent_model("curved")


@pytest.fixture(scope="session")
def noisy_500(curved):
    """A 500x500 curved instance at p=0.5 with gaussian noise sigma=0.2."""
    noise = gaussian_noise(0.2)
    return simulate(curved, noise, 500, 500, 0.5, 0), noise


def curved_cdf(x, z):
    """True CDF of g(x, Y) for Y ~ U[0, 1] under the curved family."""
    slope = 1.0 + 0.25 * np.sin(2 * np.pi * x)
    return np.clip((np.asarray(z, dtype=float) - x) / slope, 0.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            for name, value in getattr(rep, "user_properties", []):
                if name == "acceptance":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
