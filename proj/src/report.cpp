#include <cstdio>
#include <ostream>

#include "importance/eval.hpp"
#include "json.hpp"

namespace importance {

namespace {

using nlohmann::ordered_json;

// Fixed decimal text so reports compare byte-for-byte across runs.
std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

ordered_json method_json(const MethodResult& m) {
  ordered_json j;
  j["method"] = m.method;
  j["available"] = m.available;
  if (!m.note.empty()) j["note"] = m.note;
  if (!m.available) return j;
  j["weighted_accuracy_mean"] = fixed(m.wa_mean);
  j["weighted_accuracy_std"] = fixed(m.wa_std);
  if (m.mse) j["mse"] = fixed(*m.mse);
  ordered_json cats = ordered_json::object();
  for (PairCategory c : kPairCategories) {
    const auto& a = m.categories[static_cast<std::size_t>(c)];
    cats[std::string(to_string(c))] = {{"count", a.count},
                                       {"weighted_accuracy", fixed(a.weighted())},
                                       {"unweighted_accuracy", fixed(a.unweighted())}};
  }
  j["categories"] = cats;
  ordered_json folds = ordered_json::array();
  for (double v : m.fold_wa) folds.push_back(fixed(v));
  j["fold_weighted_accuracy"] = folds;
  return j;
}

ordered_json report_json(const EvalReport& r) {
  ordered_json j;
  j["pair_style"] = r.style;
  j["pairs"] = r.pairs;
  j["folds"] = r.folds;
  ordered_json counts = ordered_json::object();
  for (PairCategory c : kPairCategories) counts[std::string(to_string(c))] = r.category_counts[static_cast<std::size_t>(c)];
  j["category_counts"] = counts;
  j["leakage_pairs"] = r.leakage_pairs;
  ordered_json cs = ordered_json::array();
  for (double c : r.selected_c) cs.push_back(fixed(c));
  j["selected_c"] = cs;
  j["unconverged_solves"] = r.unconverged_solves;
  ordered_json methods = ordered_json::array();
  for (const auto& m : r.methods) methods.push_back(method_json(m));
  j["methods"] = methods;
  return j;
}

}  // namespace

void write_report_tsv(std::ostream& out, const EvalReport& report) {
  out << "method\tavailable\twa_mean\twa_std\tmse";
  for (PairCategory c : kPairCategories) out << '\t' << to_string(c) << "_n\t" << to_string(c) << "_wa\t" << to_string(c) << "_acc";
  out << '\n';
  for (const auto& m : report.methods) {
    out << m.method << '\t' << (m.available ? "yes" : "no");
    if (!m.available) {
      out << "\tNA\tNA\tNA";
      for (std::size_t c = 0; c < 3; ++c) out << "\tNA\tNA\tNA";
      out << '\n';
      continue;
    }
    out << '\t' << fixed(m.wa_mean) << '\t' << fixed(m.wa_std) << '\t' << (m.mse ? fixed(*m.mse) : "NA");
    for (const auto& a : m.categories) {
      out << '\t' << a.count << '\t' << fixed(a.weighted()) << '\t' << fixed(a.unweighted());
    }
    out << '\n';
  }
}

std::string report_to_json(const EvalReport& report, const std::optional<AgreementResult>& agreement,
                           const std::optional<LohoReport>& loho, std::span<const AblationRow> ablation) {
  ordered_json j = report_json(report);
  if (agreement) {
    ordered_json a;
    a["mean"] = fixed(agreement->mean);
    a["std"] = fixed(agreement->std);
    ordered_json per = ordered_json::object();
    for (const auto& [worker, v] : agreement->per_worker) per[worker] = fixed(v);
    a["per_worker"] = per;
    j["human_agreement"] = a;
  }
  if (loho) {
    ordered_json l;
    l["workers"] = loho->workers;
    ordered_json rows = ordered_json::array();
    for (const auto& s : loho->summary) {
      ordered_json row{{"method", s.method}, {"available", s.available}};
      if (s.available) {
        row["mean"] = fixed(s.mean);
        row["std"] = fixed(s.std);
      }
      rows.push_back(row);
    }
    l["summary"] = rows;
    j["leave_one_human_out"] = l;
  }
  if (!ablation.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : ablation) {
      ordered_json r = method_json(row.result);
      r["method"] = row.name;
      rows.push_back(r);
    }
    j["ablation"] = rows;
  }
  return j.dump(2) + "\n";
}

}  // namespace importance
