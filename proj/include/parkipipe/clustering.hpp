#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <string>
#include <vector>

#include "parkipipe/features.hpp"

namespace parkipipe {

enum class Linkage { Ward, Complete, Average };

std::string to_string(Linkage l);
Linkage linkage_from_string(const std::string& s);

struct Merge {
  int left = 0;   // node ids: leaves 0..n-1, internal nodes n.. in merge order
  int right = 0;
  double height = 0.0;
  int size = 0;  // leaves under the merged node
};

struct Dendrogram {
  int n_leaves = 0;
  std::vector<Merge> merges;  // exactly n_leaves - 1, heights non-decreasing
};

/// Agglomerative clustering with Lance-Williams updates on pairwise Euclidean
/// distances (features z-scored first unless disabled). Ties break toward the
/// lowest (left, right) node-id pair. Monotone linkages are verified; a
/// height inversion raises InvalidParams. Throws DegenerateInput for n < 2.
Dendrogram agglomerate(const Eigen::Ref<const Eigen::MatrixXd>& x, Linkage linkage = Linkage::Ward,
                       bool standardize = true);

struct ClusterAssignment {
  std::vector<int> labels;  // per row, 1..k, in traversal order of the trees
  int k = 0;
  int cut_merges = 0;      // merges applied before the cut
  double gap_low = 0.0;    // heights bounding the chosen gap
  double gap_high = 0.0;
  double gap_ratio = 0.0;  // largest gap / second largest (inf when unique)
};

/// Cuts below the largest gap between consecutive merge heights; ties pick
/// the earlier gap (more clusters). Requires n >= 3.
ClusterAssignment cut_by_largest_gap(const Dendrogram& dendrogram);

struct CompositionRow {
  int cluster = 0;
  int size = 0;
  std::array<double, 4> percent{};  // T, AR, ART, Unknown; sums to 100
};

struct CompositionTable {
  std::vector<CompositionRow> rows;
};

/// Percentage of each PD motor type per cluster, rounded to 2 decimals.
/// Throws NonPdSubject when an assigned subject is not PD. PD subjects
/// without a documented type count as Unknown.
CompositionTable composition_table(const std::vector<int>& labels,
                                   const std::vector<std::string>& subject_ids,
                                   const Cohort& cohort);

struct ModalRun {
  std::vector<std::string> feature_names;
  Dendrogram dendrogram;
  ClusterAssignment cut;
  CompositionTable composition;
  bool low_separation = false;  // gap ratio < 1.5
};

struct ModalComparison {
  std::vector<std::string> subject_ids;  // all-modality PD subjects, cohort order
  ModalRun single;  // movement columns of the cluster subset only
  ModalRun multi;   // full cluster subset
  Eigen::MatrixXi crosstab;  // single clusters x multi clusters
};

/// The single- vs multi-modal clustering comparison over all-modality PD
/// subjects. Requires at least 3 such subjects.
ModalComparison compare_modal_runs(const Cohort& cohort, const FeatureConfig& config = {},
                                   Linkage linkage = Linkage::Ward, bool standardize = true,
                                   int threads = 1);

/// Chance-corrected agreement between two labelings of the same rows.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

std::string render_composition_table(const CompositionTable& table, const std::string& prefix);
nlohmann::json dendrogram_to_json(const Dendrogram& d, const ClusterAssignment* cut);
std::string render_dendrogram_text(const Dendrogram& d, const std::vector<std::string>& leaf_names,
                                   const ClusterAssignment* cut);
std::string render_dendrogram_svg(const Dendrogram& d, const std::vector<std::string>& leaf_names,
                                  const ClusterAssignment* cut);

}  // namespace parkipipe
