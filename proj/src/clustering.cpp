#include "parkipipe/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace parkipipe {

namespace {

Eigen::MatrixXd standardize_columns(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  Eigen::MatrixXd out = x;
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / n;
    const double std = std::sqrt(var);
    out.col(j).array() -= mean;
    if (std > 0.0) out.col(j) /= std;
  }
  return out;
}

struct LeafOrder {
  std::vector<int> leaves;  // leaf node ids in display order
  std::vector<double> row_of_node;
};

LeafOrder leaf_order(const Dendrogram& d) {
  const int n = d.n_leaves;
  LeafOrder order;
  order.row_of_node.assign(static_cast<std::size_t>(2 * n - 1), 0.0);

  std::function<void(int)> visit = [&](int node) {
    if (node < n) {
      order.row_of_node[static_cast<std::size_t>(node)] =
          static_cast<double>(order.leaves.size());
      order.leaves.push_back(node);
      return;
    }
    const Merge& m = d.merges[static_cast<std::size_t>(node - n)];
    visit(m.left);
    visit(m.right);
    order.row_of_node[static_cast<std::size_t>(node)] =
        0.5 * (order.row_of_node[static_cast<std::size_t>(m.left)] +
               order.row_of_node[static_cast<std::size_t>(m.right)]);
  };
  visit(2 * n - 2);
  return order;
}

}  // namespace

std::string to_string(Linkage l) {
  switch (l) {
    case Linkage::Ward: return "ward";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  fail("InvalidParams", "unknown linkage");
}

Linkage linkage_from_string(const std::string& s) {
  if (s == "ward") return Linkage::Ward;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  fail("InvalidParams", "unknown linkage '" + s + "'");
}

Dendrogram agglomerate(const Eigen::Ref<const Eigen::MatrixXd>& x, Linkage linkage,
                       bool standardize) {
  const int n = static_cast<int>(x.rows());
  if (n < 2) fail("DegenerateInput", "agglomerate: need at least 2 rows");
  if (!x.allFinite()) fail("InvalidParams", "agglomerate: non-finite features");

  const Eigen::MatrixXd xs = standardize ? standardize_columns(x) : Eigen::MatrixXd(x);

  const int total = 2 * n - 1;
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(total, total);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = (xs.row(i) - xs.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  std::vector<bool> active(static_cast<std::size_t>(total), false);
  std::vector<double> size(static_cast<std::size_t>(total), 0.0);
  for (int i = 0; i < n; ++i) {
    active[static_cast<std::size_t>(i)] = true;
    size[static_cast<std::size_t>(i)] = 1.0;
  }

  Dendrogram out;
  out.n_leaves = n;
  double last_height = 0.0;

  for (int step = 0; step < n - 1; ++step) {
    int best_i = -1, best_j = -1;
    double best = std::numeric_limits<double>::infinity();
    const int limit = n + step;
    for (int i = 0; i < limit; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < limit; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (dist(i, j) < best) {
          best = dist(i, j);
          best_i = i;
          best_j = j;
        }
      }
    }

    const int merged = n + step;
    const double si = size[static_cast<std::size_t>(best_i)];
    const double sj = size[static_cast<std::size_t>(best_j)];
    double height = best;
    // Monotone linkages can produce sub-epsilon inversions in floating
    // arithmetic; snap those, reject anything larger.
    if (height < last_height) {
      if (height > last_height - 1e-9 * std::max(1.0, last_height)) {
        height = last_height;
      } else {
        fail("InvalidParams", "agglomerate: non-monotone merge heights under " +
                                  to_string(linkage) + " linkage");
      }
    }
    last_height = height;
    out.merges.push_back(Merge{best_i, best_j, height, static_cast<int>(si + sj)});

    for (int t = 0; t < limit; ++t) {
      if (!active[static_cast<std::size_t>(t)] || t == best_i || t == best_j) continue;
      const double st = size[static_cast<std::size_t>(t)];
      const double dit = dist(best_i, t);
      const double djt = dist(best_j, t);
      double d = 0.0;
      switch (linkage) {
        case Linkage::Ward:
          d = std::sqrt(std::max(0.0, ((si + st) * dit * dit + (sj + st) * djt * djt -
                                       st * best * best) /
                                          (si + sj + st)));
          break;
        case Linkage::Average: d = (si * dit + sj * djt) / (si + sj); break;
        case Linkage::Complete: d = std::max(dit, djt); break;
      }
      dist(merged, t) = d;
      dist(t, merged) = d;
    }
    active[static_cast<std::size_t>(best_i)] = false;
    active[static_cast<std::size_t>(best_j)] = false;
    active[static_cast<std::size_t>(merged)] = true;
    size[static_cast<std::size_t>(merged)] = si + sj;
  }
  return out;
}

ClusterAssignment cut_by_largest_gap(const Dendrogram& d) {
  const int n = d.n_leaves;
  if (n < 3) fail("DegenerateInput", "cut_by_largest_gap: need at least 3 leaves");

  std::vector<double> gaps;
  for (std::size_t j = 0; j + 1 < d.merges.size(); ++j) {
    gaps.push_back(d.merges[j + 1].height - d.merges[j].height);
  }
  std::size_t best_gap = 0;
  for (std::size_t j = 1; j < gaps.size(); ++j) {
    if (gaps[j] > gaps[best_gap]) best_gap = j;  // ties keep the earlier gap
  }

  ClusterAssignment out;
  out.cut_merges = static_cast<int>(best_gap) + 1;
  out.k = n - out.cut_merges;
  out.gap_low = d.merges[best_gap].height;
  out.gap_high = d.merges[best_gap + 1].height;

  double second = 0.0;
  bool has_second = false;
  for (std::size_t j = 0; j < gaps.size(); ++j) {
    if (j == best_gap) continue;
    second = std::max(second, gaps[j]);
    has_second = true;
  }
  out.gap_ratio = (!has_second || second <= 0.0) ? std::numeric_limits<double>::infinity()
                                                 : gaps[best_gap] / second;

  // Union-find over the first cut_merges merges.
  std::vector<int> parent(static_cast<std::size_t>(2 * n - 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (int j = 0; j < out.cut_merges; ++j) {
    const Merge& m = d.merges[static_cast<std::size_t>(j)];
    const int root = n + j;
    parent[static_cast<std::size_t>(find(m.left))] = root;
    parent[static_cast<std::size_t>(find(m.right))] = root;
  }

  // Clusters labelled 1..k in order of their smallest leaf.
  std::map<int, int> label_of_root;
  out.labels.assign(static_cast<std::size_t>(n), 0);
  int next_label = 1;
  for (int leaf = 0; leaf < n; ++leaf) {
    const int root = find(leaf);
    auto it = label_of_root.find(root);
    if (it == label_of_root.end()) {
      it = label_of_root.emplace(root, next_label++).first;
    }
    out.labels[static_cast<std::size_t>(leaf)] = it->second;
  }
  return out;
}

CompositionTable composition_table(const std::vector<int>& labels,
                                   const std::vector<std::string>& subject_ids,
                                   const Cohort& cohort) {
  if (labels.size() != subject_ids.size()) {
    fail("InvalidParams", "composition_table: labels and ids differ in length");
  }
  std::map<int, std::array<int, 4>> counts;
  std::map<int, int> sizes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const SubjectRecord* s = find_subject(cohort, subject_ids[i]);
    if (s == nullptr) fail("InvalidParams", "composition_table: unknown subject '" + subject_ids[i] + "'");
    if (s->disease != DiseaseClass::PD) {
      fail("NonPdSubject", "composition_table: subject '" + s->id + "' is not PD");
    }
    const PdMotorType type = s->motor_type.value_or(PdMotorType::Unknown);
    int type_idx = 0;
    for (std::size_t t = 0; t < kMotorTypes.size(); ++t) {
      if (kMotorTypes[t] == type) type_idx = static_cast<int>(t);
    }
    counts[labels[i]][static_cast<std::size_t>(type_idx)] += 1;
    sizes[labels[i]] += 1;
  }

  CompositionTable table;
  for (const auto& [cluster, type_counts] : counts) {
    CompositionRow row;
    row.cluster = cluster;
    row.size = sizes[cluster];
    for (std::size_t t = 0; t < 4; ++t) {
      const double pct = 100.0 * type_counts[t] / static_cast<double>(row.size);
      row.percent[t] = std::round(pct * 100.0) / 100.0;
    }
    table.rows.push_back(row);
  }
  return table;
}

ModalComparison compare_modal_runs(const Cohort& cohort, const FeatureConfig& config,
                                   Linkage linkage, bool standardize, int threads) {
  Cohort pd = filter_cohort(cohort, ModalitySet::all_four(), {DiseaseClass::PD});
  if (pd.subjects.size() < 3) {
    fail("DegenerateInput", "compare_modal_runs: need at least 3 all-modality PD subjects");
  }

  const AssembleResult assembled = assemble(pd, Modality::ClusterSubset, config, threads);
  const FeatureMatrix& fm = assembled.matrix;

  std::vector<Eigen::Index> mov_cols;
  for (std::size_t j = 0; j < fm.names.size(); ++j) {
    if (fm.names[j].rfind("mov_", 0) == 0) mov_cols.push_back(static_cast<Eigen::Index>(j));
  }
  Eigen::MatrixXd single_x(fm.values.rows(), static_cast<Eigen::Index>(mov_cols.size()));
  std::vector<std::string> single_names;
  for (std::size_t j = 0; j < mov_cols.size(); ++j) {
    single_x.col(static_cast<Eigen::Index>(j)) = fm.values.col(mov_cols[j]);
    single_names.push_back(fm.names[static_cast<std::size_t>(mov_cols[j])]);
  }

  ModalComparison cmp;
  cmp.subject_ids = fm.subject_ids;

  auto run = [&](const Eigen::MatrixXd& x, std::vector<std::string> names) {
    ModalRun r;
    r.feature_names = std::move(names);
    r.dendrogram = agglomerate(x, linkage, standardize);
    r.cut = cut_by_largest_gap(r.dendrogram);
    r.composition = composition_table(r.cut.labels, fm.subject_ids, cohort);
    r.low_separation = r.cut.gap_ratio < 1.5;
    return r;
  };
  cmp.single = run(single_x, single_names);
  cmp.multi = run(fm.values, fm.names);

  cmp.crosstab = Eigen::MatrixXi::Zero(cmp.single.cut.k, cmp.multi.cut.k);
  for (std::size_t i = 0; i < fm.subject_ids.size(); ++i) {
    cmp.crosstab(cmp.single.cut.labels[i] - 1, cmp.multi.cut.labels[i] - 1) += 1;
  }
  return cmp;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail("InvalidParams", "adjusted_rand_index: length mismatch");
  if (a.empty()) fail("InvalidParams", "adjusted_rand_index: empty labelings");

  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> row_sums, col_sums;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1;
    row_sums[a[i]] += 1;
    col_sums[b[i]] += 1;
  }
  auto choose2 = [](long m) { return 0.5 * static_cast<double>(m) * static_cast<double>(m - 1); };

  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : cells) sum_cells += choose2(count);
  for (const auto& [key, count] : row_sums) sum_rows += choose2(count);
  for (const auto& [key, count] : col_sums) sum_cols += choose2(count);

  const double total_pairs = choose2(static_cast<long>(a.size()));
  const double expected = sum_rows * sum_cols / total_pairs;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  if (maximum - expected == 0.0) return 1.0;
  return (sum_cells - expected) / (maximum - expected);
}

std::string render_composition_table(const CompositionTable& table, const std::string& prefix) {
  std::ostringstream os;
  os << "Type";
  for (const CompositionRow& row : table.rows) {
    os << "\tCluster " << prefix << row.cluster;
  }
  os << "\n";
  const std::array<std::string, 4> type_names = {"T-Type", "AR-Type", "ART-Type", "Unknown"};
  for (std::size_t t = 0; t < 4; ++t) {
    os << type_names[t];
    for (const CompositionRow& row : table.rows) {
      os << "\t" << format_fixed(row.percent[t], 2);
    }
    os << "\n";
  }
  return os.str();
}

nlohmann::json dendrogram_to_json(const Dendrogram& d, const ClusterAssignment* cut) {
  nlohmann::json merges = nlohmann::json::array();
  for (const Merge& m : d.merges) {
    merges.push_back(
        {{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  }
  nlohmann::json doc{{"n_leaves", d.n_leaves}, {"merges", std::move(merges)}};
  if (cut) {
    doc["cut"] = {{"k", cut->k},
                  {"merges_applied", cut->cut_merges},
                  {"gap_low", cut->gap_low},
                  {"gap_high", cut->gap_high},
                  {"gap_ratio", cut->gap_ratio},
                  {"labels", cut->labels}};
  }
  return doc;
}

std::string render_dendrogram_text(const Dendrogram& d, const std::vector<std::string>& leaf_names,
                                   const ClusterAssignment* cut) {
  const int n = d.n_leaves;
  if (static_cast<int>(leaf_names.size()) != n) {
    fail("InvalidParams", "render_dendrogram_text: leaf name count mismatch");
  }
  const LeafOrder order = leaf_order(d);

  std::size_t name_width = 0;
  for (const std::string& s : leaf_names) name_width = std::max(name_width, s.size());
  name_width += 2;

  const int plot_width = 64;
  const double h_max = d.merges.empty() ? 1.0 : std::max(d.merges.back().height, 1e-12);
  auto col_of = [&](double h) {
    return static_cast<int>(name_width) + 1 +
           static_cast<int>(std::lround(h / h_max * (plot_width - 1)));
  };

  const int rows = 2 * n - 1;
  const int cols = static_cast<int>(name_width) + plot_width + 4;
  std::vector<std::string> canvas(static_cast<std::size_t>(rows),
                                  std::string(static_cast<std::size_t>(cols), ' '));

  std::vector<int> node_col(static_cast<std::size_t>(2 * n - 1), static_cast<int>(name_width));
  auto row_px = [&](int node) {
    return static_cast<int>(std::lround(order.row_of_node[static_cast<std::size_t>(node)] * 2.0));
  };

  for (std::size_t i = 0; i < order.leaves.size(); ++i) {
    const int leaf = order.leaves[i];
    const int r = static_cast<int>(i) * 2;
    const std::string& name = leaf_names[static_cast<std::size_t>(leaf)];
    canvas[static_cast<std::size_t>(r)].replace(0, name.size(), name);
  }

  for (std::size_t j = 0; j < d.merges.size(); ++j) {
    const Merge& m = d.merges[j];
    const int node = n + static_cast<int>(j);
    const int c = col_of(m.height);
    node_col[static_cast<std::size_t>(node)] = c;
    const int rl = row_px(m.left);
    const int rr = row_px(m.right);
    const int cl = node_col[static_cast<std::size_t>(m.left)];
    const int cr = node_col[static_cast<std::size_t>(m.right)];
    for (int x = cl; x < c; ++x) canvas[static_cast<std::size_t>(rl)][static_cast<std::size_t>(x)] = '-';
    for (int x = cr; x < c; ++x) canvas[static_cast<std::size_t>(rr)][static_cast<std::size_t>(x)] = '-';
    const int r0 = std::min(rl, rr), r1 = std::max(rl, rr);
    for (int y = r0; y <= r1; ++y) {
      char& ch = canvas[static_cast<std::size_t>(y)][static_cast<std::size_t>(c)];
      ch = (y == r0 || y == r1) ? '+' : '|';
    }
  }

  if (cut) {
    const int c = col_of(0.5 * (cut->gap_low + cut->gap_high));
    for (int y = 0; y < rows; ++y) {
      char& ch = canvas[static_cast<std::size_t>(y)][static_cast<std::size_t>(c)];
      if (ch == ' ') ch = ':';
    }
  }

  std::ostringstream os;
  for (const std::string& line : canvas) {
    std::string trimmed = line;
    while (!trimmed.empty() && trimmed.back() == ' ') trimmed.pop_back();
    os << trimmed << "\n";
  }
  if (cut) {
    os << "cut: k = " << cut->k << ", gap " << format_double(cut->gap_low) << " -> "
       << format_double(cut->gap_high) << "\n";
  }
  return os.str();
}

std::string render_dendrogram_svg(const Dendrogram& d, const std::vector<std::string>& leaf_names,
                                  const ClusterAssignment* cut) {
  const int n = d.n_leaves;
  if (static_cast<int>(leaf_names.size()) != n) {
    fail("InvalidParams", "render_dendrogram_svg: leaf name count mismatch");
  }
  const LeafOrder order = leaf_order(d);
  const double row_h = 18.0, label_w = 120.0, plot_w = 600.0, margin = 10.0;
  const double height = row_h * n + 2 * margin;
  const double h_max = d.merges.empty() ? 1.0 : std::max(d.merges.back().height, 1e-12);
  auto x_of = [&](double h) { return label_w + h / h_max * plot_w; };
  auto y_of = [&](int node) {
    return margin + (order.row_of_node[static_cast<std::size_t>(node)] + 0.5) * row_h;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\""
     << format_double(label_w + plot_w + 2 * margin) << "\" height=\"" << format_double(height)
     << "\">\n";
  for (std::size_t i = 0; i < order.leaves.size(); ++i) {
    const int leaf = order.leaves[i];
    os << "  <text x=\"4\" y=\"" << format_double(margin + (i + 0.5) * row_h + 4)
       << "\" font-size=\"11\" font-family=\"monospace\">" << leaf_names[static_cast<std::size_t>(leaf)]
       << "</text>\n";
  }
  std::vector<double> node_x(static_cast<std::size_t>(2 * n - 1), label_w);
  for (std::size_t j = 0; j < d.merges.size(); ++j) {
    const Merge& m = d.merges[j];
    const int node = n + static_cast<int>(j);
    const double x = x_of(m.height);
    node_x[static_cast<std::size_t>(node)] = x;
    const double yl = y_of(m.left), yr = y_of(m.right);
    os << "  <path d=\"M " << format_double(node_x[static_cast<std::size_t>(m.left)]) << " "
       << format_double(yl) << " H " << format_double(x) << " V " << format_double(yr) << " H "
       << format_double(node_x[static_cast<std::size_t>(m.right)])
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  }
  if (cut) {
    const double x = x_of(0.5 * (cut->gap_low + cut->gap_high));
    os << "  <line x1=\"" << format_double(x) << "\" y1=\"0\" x2=\"" << format_double(x)
       << "\" y2=\"" << format_double(height)
       << "\" stroke=\"gray\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace parkipipe
