app_name = "lgt"
app_title = "LGT"
app_publisher = "LGT Contributors"
app_description = "Leading-term free energy of U(N) lattice gauge theory."
app_license = "mit"

# Reports
# -------

report_schema = "lgt-report/1"

# fields left out of determinism comparisons
volatile_report_fields = ("timestamp", "runtime_ms")

# CSV schemas; column order is fixed
csv_columns = {
	"maxwell-kd": ("n", "d", "free_edges", "logdet", "K_nd", "F_M"),
	"beta-grid": ("beta", "mean_action", "stderr", "acceptance", "source"),
	"result": ("quantity", "value"),
	"verify": ("suite", "check", "passed"),
}

# Size caps
# ---------

max_free_edges = 500_000
max_dimension = 4

# Verification suites
# -------------------
# suite name -> dotted path of a callable taking (seed) and returning a list of CheckResult

verify_suites = {
	"combinatorics": "lgt.lattice_gauge.verify.suites.run_combinatorics",
	"smallball": "lgt.lattice_gauge.verify.suites.run_smallball",
	"gauge": "lgt.lattice_gauge.verify.suites.run_gauge",
	"poincare": "lgt.lattice_gauge.verify.suites.run_poincare",
	"liealgebra": "lgt.lattice_gauge.verify.suites.run_liealgebra",
	"maxwell": "lgt.lattice_gauge.verify.suites.run_maxwell",
	"theorem1": "lgt.lattice_gauge.verify.suites.run_theorem1",
}
