#pragma once

#include <filesystem>

#include "parkipipe/datamodel.hpp"

namespace parkipipe {

/// Cohort directory layout:
///   cohort.json                     manifest: schema_version, seed, subjects
///   <id>/questionnaire.json         array of 30 booleans
///   <id>/movement/<task>_<wrist>.csv   header t,ax,ay,az,gx,gy,gz
///   <id>/voice/<task_id>.csv        header sample
///   <id>/taps.csv                   header t,x,y
/// Sample rates and tap duration live in the manifest subject entries.
Cohort load_cohort(const std::filesystem::path& dir);

/// Writes the directory format above. The target directory must not already
/// contain a cohort.json. Output is byte-deterministic for a given cohort.
void save_cohort(const Cohort& cohort, const std::filesystem::path& dir);

/// Standalone subject directory: same per-subject layout plus a subject.json
/// holding the manifest entry fields (id, disease, rates, ...).
SubjectRecord load_subject_dir(const std::filesystem::path& dir);
void save_subject_dir(const SubjectRecord& subject, const std::filesystem::path& dir);

}  // namespace parkipipe
