"""Python bindings for the phesopt wind + pumped-hydro market optimizer."""

from ._phesopt import (
    PowerCurve,
    gen_data,
    load_power_curve,
    run_cases,
    solve_dump,
)

__all__ = ["PowerCurve", "gen_data", "load_power_curve", "run_cases", "solve_dump"]
