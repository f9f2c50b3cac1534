#include <cstdio>

#include "cloudsample/gradcheck.hpp"
#include "commands.hpp"

namespace cloudsample::cli {

int run_gradcheck(const GradcheckArgs& args, std::ostream& out) {
  if (!(args.eps > 0)) throw Error(Errc::InvalidConfig, "--eps must be > 0");
  const bool all = !args.ops && !args.end_to_end;
  std::vector<gradcheck::CheckRow> rows;
  if (args.ops || all) rows = gradcheck::check_ops(args.eps, args.seed);
  if (args.end_to_end || all) {
    rows.push_back(gradcheck::check_end_to_end(SamplingMode::Soft, args.eps, args.seed));
    rows.push_back(gradcheck::check_end_to_end(SamplingMode::Hard, args.eps, args.seed));
  }

  bool ok = true;
  out << "check,max_rel_err,threshold,status\n";
  for (const auto& row : rows) {
    const char* status = !row.enforced ? "info" : row.passed() ? "ok" : "FAIL";
    ok = ok && row.passed();
    char line[160];
    std::snprintf(line, sizeof line, "%s,%.3e,%.0e,%s\n", row.name.c_str(),
                  row.max_relative_error, row.threshold, status);
    out << line;
  }
  return ok ? 0 : 1;
}

}  // namespace cloudsample::cli
