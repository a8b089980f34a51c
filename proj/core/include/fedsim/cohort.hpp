#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/model.hpp"
#include "fedsim/numkit.hpp"

namespace fedsim::cohort {

enum class Modality { kT1, kT2 };

/// Risk-level class indices used throughout: 0 = no risk, 1 = low risk,
/// 2 = high risk.
inline constexpr int kNoRisk = 0;
inline constexpr int kLowRisk = 1;
inline constexpr int kHighRisk = 2;

struct CenterProfile {
  std::string name;
  int no_risk = 0;
  int low_risk = 0;
  int high_risk = 0;
  Modality modality = Modality::kT1;

  int total() const { return no_risk + low_risk + high_risk; }
  int count_for(int label) const;
};

/// The seven built-in center profiles (NYU, MCF, NU, AHN, MCA, IU, EMC)
/// with their per-class case counts for the chosen modality.
std::vector<CenterProfile> builtin_profiles(Modality modality);

/// Collapses the three risk levels to the binary high-risk task:
/// high -> 1, everything else -> 0.
int binarize(int label3);

struct CenterData {
  CenterProfile profile;
  std::vector<model::LabeledExample> examples;
};

struct Cohort {
  std::vector<CenterData> centers;
  int feature_dim = 0;
  int num_classes = 3;  // 3 for risk-level labels, 2 for binary files
};

/// Maps every example's label through binarize(); class counts in the
/// profiles are collapsed accordingly.
Cohort binarize_cohort(const Cohort& cohort);

/// Synthetic non-IID cohort. Center k gets an offset c_k ~ N(0, center_shift^2 I);
/// a class-y example is N(c_k + y * class_separation * e_0, I). Per-class
/// counts match the profiles exactly and everything is a pure function of
/// the seed.
Cohort synth_generate(const std::vector<CenterProfile>& profiles,
                      int feature_dim, double center_shift,
                      double class_separation, std::uint64_t seed);

/// Reads "center,label,f0,...,f{d-1}" CSV. Labels are either the risk tokens
/// (no/low/high, case-insensitive) or the binary digits 0/1; mixing the two
/// styles is rejected. Rows group into centers in first-appearance order.
Cohort load_csv(const std::string& path);

/// Writes the load_csv format: "\n" line endings, features with 17
/// significant digits so a reload reproduces every bit.
void save_csv(const Cohort& cohort, const std::string& path);

struct FoldAssignment {
  int k = 0;
  // fold_of[center][example index] = fold index in [0, k)
  std::vector<std::vector<int>> fold_of;
};

/// Within each (center, class) cell: seeded shuffle, then round-robin deal
/// into k folds, so cell fold sizes differ by at most one.
FoldAssignment stratified_kfold(const Cohort& cohort, int k,
                                std::uint64_t seed);

/// Per-center train/test views for one fold: test = examples assigned to
/// `fold`, train = the rest.
struct FoldSplit {
  std::vector<std::vector<model::LabeledExample>> train;  // per center
  std::vector<std::vector<model::LabeledExample>> test;   // per center
};

FoldSplit split_fold(const Cohort& cohort, const FoldAssignment& assignment,
                     int fold);

}  // namespace fedsim::cohort
