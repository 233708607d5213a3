#!/usr/bin/env python3
"""Solve an LP file with HiGHS and write a brp solution file.

Usage: highs_solve.py MODEL.lp SOLUTION.sol [TIME_LIMIT_SECONDS]

Exit status 127 when highspy is missing, so the caller reports the backend
as unavailable.
"""
import sys

try:
    import highspy
except ImportError:
    sys.stderr.write("highspy is not installed\n")
    sys.exit(127)


def main(argv):
    if len(argv) < 3:
        sys.stderr.write(__doc__)
        return 2
    lp, sol = argv[1], argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if len(argv) > 3:
        h.setOptionValue("time_limit", float(argv[3]))
    if h.readModel(lp) != highspy.HighsStatus.kOk:
        sys.stderr.write(f"HiGHS could not read {lp}\n")
        return 1
    h.run()
    status = h.getModelStatus()
    ms = highspy.HighsModelStatus
    info = h.getInfo()
    has_values = info.primal_solution_status == 2
    if status == ms.kOptimal:
        tag = "optimal"
    elif status in (ms.kInfeasible, ms.kUnboundedOrInfeasible):
        tag = "infeasible"
    elif has_values:
        tag = "feasible"
    else:
        tag = "budget"
    with open(sol, "w") as out:
        out.write(f"status {tag}\n")
        if has_values:
            out.write(f"objective {info.objective_function_value!r}\n")
            values = h.getSolution().col_value
            lp_model = h.getLp()
            for name, v in zip(lp_model.col_names_, values):
                out.write(f"{name} {v!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
