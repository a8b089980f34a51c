#include "fedsim/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace fedsim::cohort {

namespace {

const char* kCenterNames[7] = {"NYU", "MCF", "NU", "AHN", "MCA", "IU", "EMC"};

// (no, low, high) per center, in the fixed NYU..EMC order.
constexpr std::array<std::array<int, 3>, 7> kT1Counts = {{
    {48, 79, 23},
    {29, 42, 63},
    {43, 126, 17},
    {1, 11, 4},
    {0, 10, 14},
    {3, 48, 13},
    {40, 23, 15},
}};

constexpr std::array<std::array<int, 3>, 7> kT2Counts = {{
    {48, 79, 24},
    {25, 42, 63},
    {44, 127, 16},
    {1, 13, 4},
    {0, 7, 16},
    {3, 46, 14},
    {38, 30, 15},
}};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_feature(const std::string& token, std::size_t line_no) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw FormatError("line " + std::to_string(line_no) +
                      ": bad feature value '" + token + "'");
  }
  return value;
}

}  // namespace

int CenterProfile::count_for(int label) const {
  switch (label) {
    case kNoRisk:
      return no_risk;
    case kLowRisk:
      return low_risk;
    case kHighRisk:
      return high_risk;
    default:
      throw ValueError("count_for: label out of range");
  }
}

std::vector<CenterProfile> builtin_profiles(Modality modality) {
  const auto& counts = modality == Modality::kT1 ? kT1Counts : kT2Counts;
  std::vector<CenterProfile> out;
  out.reserve(7);
  for (int i = 0; i < 7; ++i) {
    out.push_back(CenterProfile{kCenterNames[i], counts[i][0], counts[i][1],
                                counts[i][2], modality});
  }
  return out;
}

int binarize(int label3) {
  if (label3 < 0 || label3 > 2) {
    throw ValueError("binarize: label must be in {0,1,2}");
  }
  return label3 == kHighRisk ? 1 : 0;
}

Cohort binarize_cohort(const Cohort& cohort) {
  Cohort out;
  out.feature_dim = cohort.feature_dim;
  out.num_classes = 2;
  out.centers.reserve(cohort.centers.size());
  for (const CenterData& center : cohort.centers) {
    CenterData mapped;
    mapped.profile = center.profile;
    mapped.profile.no_risk = 0;
    mapped.profile.low_risk = 0;
    mapped.profile.high_risk = 0;
    mapped.examples.reserve(center.examples.size());
    for (const model::LabeledExample& ex : center.examples) {
      const int b = cohort.num_classes == 2 ? ex.label : binarize(ex.label);
      (b == 1 ? mapped.profile.high_risk : mapped.profile.no_risk) += 1;
      mapped.examples.push_back(model::LabeledExample{ex.features, b});
    }
    out.centers.push_back(std::move(mapped));
  }
  return out;
}

Cohort synth_generate(const std::vector<CenterProfile>& profiles,
                      int feature_dim, double center_shift,
                      double class_separation, std::uint64_t seed) {
  if (feature_dim < 1) {
    throw ValueError("synth_generate: feature_dim must be >= 1");
  }
  if (center_shift < 0.0 || class_separation < 0.0) {
    throw ValueError("synth_generate: spread parameters must be >= 0");
  }
  Cohort out;
  out.feature_dim = feature_dim;
  out.num_classes = 3;
  out.centers.reserve(profiles.size());
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    CenterData center;
    center.profile = profiles[k];
    numkit::RngStream offset_rng(
        seed, {numkit::StreamPurpose::kCenterOffset,
               static_cast<std::uint32_t>(k), 0});
    const ParamVector offset = numkit::draw_gaussian(
        offset_rng, static_cast<std::size_t>(feature_dim), 0.0, center_shift);
    center.examples.reserve(static_cast<std::size_t>(center.profile.total()));
    for (int y = 0; y < 3; ++y) {
      numkit::RngStream rng(seed,
                            {numkit::StreamPurpose::kSynthData,
                             static_cast<std::uint32_t>(k),
                             static_cast<std::uint32_t>(y)});
      const int n = center.profile.count_for(y);
      for (int i = 0; i < n; ++i) {
        model::LabeledExample ex;
        ex.features = numkit::draw_gaussian(
            rng, static_cast<std::size_t>(feature_dim), 0.0, 1.0);
        for (int d = 0; d < feature_dim; ++d) {
          ex.features[d] += offset[d];
        }
        // Class separation along the first basis direction only.
        ex.features[0] += static_cast<double>(y) * class_separation;
        ex.label = y;
        center.examples.push_back(std::move(ex));
      }
    }
    out.centers.push_back(std::move(center));
  }
  return out;
}

Cohort load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("load_csv: cannot open '" + path + "'");
  }
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&](std::string& dst) {
    if (!std::getline(in, dst)) {
      return false;
    }
    ++line_no;
    if (!dst.empty() && dst.back() == '\r') {
      dst.pop_back();
    }
    return true;
  };

  if (!next_line(line)) {
    throw EmptyInputError("load_csv: '" + path + "' is empty");
  }
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 3 || header[0] != "center" || header[1] != "label") {
    throw FormatError("line 1: header must start with 'center,label,f0,...'");
  }
  const int feature_dim = static_cast<int>(header.size()) - 2;
  for (int d = 0; d < feature_dim; ++d) {
    if (header[static_cast<std::size_t>(d) + 2] != "f" + std::to_string(d)) {
      throw FormatError("line 1: feature column " + std::to_string(d) +
                        " must be named f" + std::to_string(d));
    }
  }

  Cohort out;
  out.feature_dim = feature_dim;
  // 0 = undecided, 2 = numeric {0,1} labels, 3 = risk tokens.
  int label_style = 0;
  std::unordered_map<std::string, std::size_t> center_index;

  while (next_line(line)) {
    if (line.empty()) {
      throw FormatError("line " + std::to_string(line_no) + ": blank row");
    }
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    const std::string& center_name = fields[0];
    if (center_name.empty()) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": empty center name");
    }

    const std::string token = lower(fields[1]);
    int label = 0;
    int style = 0;
    if (token == "no") {
      label = kNoRisk;
      style = 3;
    } else if (token == "low") {
      label = kLowRisk;
      style = 3;
    } else if (token == "high") {
      label = kHighRisk;
      style = 3;
    } else if (token == "0" || token == "1") {
      label = token == "1" ? 1 : 0;
      style = 2;
    } else {
      throw ValueError("line " + std::to_string(line_no) +
                       ": unknown label '" + fields[1] + "'");
    }
    if (label_style == 0) {
      label_style = style;
    } else if (label_style != style) {
      throw ValueError("line " + std::to_string(line_no) +
                       ": label style mixes risk tokens and binary digits");
    }

    model::LabeledExample ex;
    ex.label = label;
    ex.features.resize(static_cast<std::size_t>(feature_dim));
    for (int d = 0; d < feature_dim; ++d) {
      ex.features[static_cast<std::size_t>(d)] =
          parse_feature(fields[static_cast<std::size_t>(d) + 2], line_no);
    }

    auto [it, inserted] =
        center_index.try_emplace(center_name, out.centers.size());
    if (inserted) {
      CenterData center;
      center.profile.name = center_name;
      out.centers.push_back(std::move(center));
    }
    CenterData& center = out.centers[it->second];
    if (label_style == 3) {
      (label == kNoRisk    ? center.profile.no_risk
       : label == kLowRisk ? center.profile.low_risk
                           : center.profile.high_risk) += 1;
    } else {
      (label == 1 ? center.profile.high_risk : center.profile.no_risk) += 1;
    }
    center.examples.push_back(std::move(ex));
  }

  if (out.centers.empty()) {
    throw EmptyInputError("load_csv: '" + path + "' has no data rows");
  }
  out.num_classes = label_style == 2 ? 2 : 3;
  return out;
}

void save_csv(const Cohort& cohort, const std::string& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) {
    throw IoError("save_csv: cannot write '" + path + "'");
  }
  outf << "center,label";
  for (int d = 0; d < cohort.feature_dim; ++d) {
    outf << ",f" << d;
  }
  outf << '\n';
  char buf[40];
  for (const CenterData& center : cohort.centers) {
    if (center.profile.name.find_first_of(",\n\r") != std::string::npos) {
      throw ValueError("save_csv: center name '" + center.profile.name +
                       "' contains a delimiter");
    }
    for (const model::LabeledExample& ex : center.examples) {
      outf << center.profile.name << ',';
      if (cohort.num_classes == 2) {
        outf << ex.label;
      } else {
        outf << (ex.label == kNoRisk ? "no"
                 : ex.label == kLowRisk ? "low"
                                        : "high");
      }
      for (const double f : ex.features) {
        std::snprintf(buf, sizeof(buf), "%.17g", f);
        outf << ',' << buf;
      }
      outf << '\n';
    }
  }
  if (!outf) {
    throw IoError("save_csv: write to '" + path + "' failed");
  }
}

FoldAssignment stratified_kfold(const Cohort& cohort, int k,
                                std::uint64_t seed) {
  if (k < 2) {
    throw ValueError("stratified_kfold: k must be >= 2");
  }
  FoldAssignment out;
  out.k = k;
  out.fold_of.resize(cohort.centers.size());
  for (std::size_t c = 0; c < cohort.centers.size(); ++c) {
    const CenterData& center = cohort.centers[c];
    out.fold_of[c].assign(center.examples.size(), -1);
    for (int y = 0; y < cohort.num_classes; ++y) {
      std::vector<std::size_t> cell;
      for (std::size_t i = 0; i < center.examples.size(); ++i) {
        if (center.examples[i].label == y) {
          cell.push_back(i);
        }
      }
      numkit::RngStream rng(seed, {numkit::StreamPurpose::kFoldSplit,
                                   static_cast<std::uint32_t>(c),
                                   static_cast<std::uint32_t>(y)});
      numkit::shuffle(cell, rng);
      for (std::size_t i = 0; i < cell.size(); ++i) {
        out.fold_of[c][cell[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
      }
    }
    for (std::size_t i = 0; i < out.fold_of[c].size(); ++i) {
      if (out.fold_of[c][i] < 0) {
        throw ValueError("stratified_kfold: label outside [0, num_classes) at center " +
                         center.profile.name);
      }
    }
  }
  return out;
}

FoldSplit split_fold(const Cohort& cohort, const FoldAssignment& assignment,
                     int fold) {
  if (fold < 0 || fold >= assignment.k) {
    throw ValueError("split_fold: fold index out of range");
  }
  if (assignment.fold_of.size() != cohort.centers.size()) {
    throw DimensionError("split_fold: assignment does not match cohort");
  }
  FoldSplit out;
  out.train.resize(cohort.centers.size());
  out.test.resize(cohort.centers.size());
  for (std::size_t c = 0; c < cohort.centers.size(); ++c) {
    const CenterData& center = cohort.centers[c];
    if (assignment.fold_of[c].size() != center.examples.size()) {
      throw DimensionError("split_fold: assignment does not match cohort");
    }
    for (std::size_t i = 0; i < center.examples.size(); ++i) {
      (assignment.fold_of[c][i] == fold ? out.test : out.train)[c].push_back(
          center.examples[i]);
    }
  }
  return out;
}

}  // namespace fedsim::cohort
