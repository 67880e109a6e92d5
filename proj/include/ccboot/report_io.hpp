#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "ccboot/study.hpp"

namespace ccboot {

// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

// Long-format CSV, one record per (coefficient, metric):
//   n,fraction,n_sims,b,seed,coefficient,metric,value
// Coefficient rows use labels beta0..betaP; scenario-wide quantities use the
// label "scenario" with metrics mean_duplicates, failed_simulations,
// boot_failed_redraws_naive and boot_failed_redraws_proposed.
void write_report_csv(std::ostream& out, const StudyReport& report);
StudyReport read_report_csv(std::istream& in);

// Table laid out like the published simulation table: one column for the
// scenario, rows Mean, SE, the three SE means and three coverages for each
// slope coefficient.
void render_report_table(std::ostream& out, const StudyReport& report);

}  // namespace ccboot
