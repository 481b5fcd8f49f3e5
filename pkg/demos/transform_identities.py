"""
Thinning and superposition act simply on generating functionals:

    thinning by p rescales the argument:   A_{p o X}(u) = A_X(p u)
    independent sums multiply:             A_{xi + eta} = A_xi * A_eta

Here both are checked by simulation against closed forms or independent
estimates, for integer laws and for every process in the catalog.
"""

from thinlaw import Window, default_dictionary
from thinlaw.properties import (
    apgf_thinning_grid,
    apgfl_superposition_checks,
    apgfl_thinning_checks,
    closed_form_catalog,
    process_catalog,
)

window = Window.unit(2)
dictionary = default_dictionary(window)

groups = {
    "integer thinning": apgf_thinning_grid(closed_form_catalog(), 50_000, seed=1),
    "process thinning": apgfl_thinning_checks(process_catalog(window), dictionary, 50_000, seed=1),
    "superposition": apgfl_superposition_checks(process_catalog(window), dictionary, 50_000, seed=1),
}
for name, checks in groups.items():
    z = sorted(c.z for c in checks)
    within3 = sum(v < 3 for v in z) / len(z)
    print(f"{name:>17}: {len(z):>3} cells, {within3:.1%} within 3 stderr, largest z = {z[-1]:.2f}")

# one cell in detail
c = groups["process thinning"][0]
print(f"\n{c.name}\n  empirical {c.value:.5f}  target {c.target:.5f}  stderr {c.stderr:.5f}")
