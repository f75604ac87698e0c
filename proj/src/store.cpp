#include "popa/store.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include "popa/error.hpp"
#include "popa/ingest.hpp"
#include "text_util.hpp"

namespace popa {

namespace fs = std::filesystem;

bool valid_subject_id(std::string_view id) {
  if (id.empty() || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '.' || c == '_' || c == '-';
  });
}

std::string iso8601(std::int64_t unix_seconds) {
  const auto t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string iso8601_now() { return iso8601(static_cast<std::int64_t>(std::time(nullptr))); }

std::string write_profile(const SubjectProfile& p) {
  if (!valid_subject_id(p.subject_id)) {
    throw Error(ErrorCode::InvalidSubjectId, "'" + p.subject_id + "'");
  }
  std::ostringstream out;
  out << kProfileMagic << '\n'
      << "subject=" << p.subject_id << '\n'
      << "created=" << p.created << '\n'
      << "updated=" << p.updated << '\n'
      << "model_seed=" << p.model_seed << '\n'
      << "algorithm=" << p.algorithm.name() << '\n';
  for (const auto& [key, value] : p.algorithm.hyperparams()) {
    if (key == "k") continue;  // carried by the algorithm name
    out << key << '=' << value << '\n';
  }
  out << "frames=" << p.enrollment.frames.size() << '\n';
  write_csv(out, p.enrollment);
  return out.str();
}

namespace {

[[noreturn]] void corrupt(const std::string& what, std::size_t line) {
  throw Error(ErrorCode::CorruptProfile, what, line);
}

void check_magic(std::string_view line) {
  if (line == kProfileMagic) return;
  if (line.starts_with("#popa-profile v")) {
    throw Error(ErrorCode::VersionMismatch, "unsupported profile version '" + std::string(line) + "'", 1);
  }
  corrupt("not a profile", 1);
}

template <typename Int>
Int parse_count(std::string_view value, std::size_t line) {
  auto v = text::parse_int<Int>(value);
  if (!v) corrupt("bad integer '" + std::string(value) + "'", line);
  return *v;
}

}  // namespace

SubjectProfile parse_profile(std::string_view content) {
  std::istringstream in{std::string(content)};
  std::string line;
  if (!std::getline(in, line)) corrupt("empty file", 1);
  check_magic(line);

  std::map<std::string, std::pair<std::string, std::size_t>> meta;
  std::size_t line_no = 1;
  std::optional<std::size_t> n_frames;
  while (std::getline(in, line)) {
    ++line_no;
    auto kv = text::key_value(line);
    if (!kv) corrupt("expected key=value", line_no);
    if (kv->first == "frames") {
      n_frames = parse_count<std::size_t>(kv->second, line_no);
      break;
    }
    meta[std::string(kv->first)] = {std::string(kv->second), line_no};
  }
  if (!n_frames) corrupt("missing frames= line", line_no);

  auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
    auto it = meta.find(key);
    if (it == meta.end()) corrupt("missing " + key, line_no);
    return it->second;
  };

  SubjectProfile p;
  p.subject_id = get("subject").first;
  if (!valid_subject_id(p.subject_id)) corrupt("invalid subject id", get("subject").second);
  p.created = get("created").first;
  p.updated = get("updated").first;
  p.model_seed = parse_count<std::uint64_t>(get("model_seed").first, get("model_seed").second);
  try {
    p.algorithm = AlgorithmSpec::from_name(get("algorithm").first);
  } catch (const Error& e) {
    corrupt(e.detail(), get("algorithm").second);
  }
  switch (p.algorithm.algorithm) {
    case Algorithm::Forest:
      p.algorithm.forest.n_trees = parse_count<std::size_t>(get("n_trees").first, get("n_trees").second);
      p.algorithm.forest.mtry = parse_count<std::size_t>(get("mtry").first, get("mtry").second);
      p.algorithm.forest.max_depth = parse_count<std::size_t>(get("max_depth").first, get("max_depth").second);
      p.algorithm.forest.min_leaf = parse_count<std::size_t>(get("min_leaf").first, get("min_leaf").second);
      break;
    case Algorithm::KNN:
      break;
    case Algorithm::SVM: {
      const auto& [lambda, at] = get("lambda");
      auto v = text::parse_double(lambda);
      if (!v) corrupt("bad lambda", at);
      p.algorithm.svm.lambda = *v;
      p.algorithm.svm.epochs = parse_count<std::size_t>(get("epochs").first, get("epochs").second);
      break;
    }
  }

  try {
    p.enrollment = parse_csv(in, line_no + 1);
  } catch (const Error& e) {
    corrupt(std::string("embedded recording: ") + e.detail(), e.line());
  }
  if (p.enrollment.frames.size() != *n_frames) {
    corrupt("expected " + std::to_string(*n_frames) + " frames, found " +
                std::to_string(p.enrollment.frames.size()) + " (truncated?)",
            line_no + 3 + p.enrollment.frames.size());
  }
  if (p.enrollment.subject_id != p.subject_id) corrupt("recording subject differs", line_no + 2);
  return p;
}

fs::path save_profile(const SubjectProfile& profile, const fs::path& directory) {
  const std::string body = write_profile(profile);
  const fs::path target = directory / (profile.subject_id + std::string(kProfileExtension));
  const fs::path temp = directory / ("." + profile.subject_id + std::string(kProfileExtension) + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + temp.string());
    out << body;
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + temp.string());
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::IoFailure, "cannot rename into " + target.string());
  }
  return target;
}

SubjectProfile load_profile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_profile(buf.str());
}

std::vector<std::pair<std::string, fs::path>> list_profiles(const fs::path& directory) {
  std::error_code ec;
  fs::directory_iterator it(directory, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot list " + directory.string());

  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& entry : it) {
    if (!entry.is_regular_file() || entry.path().extension() != kProfileExtension) continue;
    std::ifstream in(entry.path());
    std::string magic, subject;
    if (!std::getline(in, magic)) {
      throw Error(ErrorCode::CorruptProfile, entry.path().string() + ": empty file", 1);
    }
    check_magic(magic);
    if (!std::getline(in, subject) || !subject.starts_with("subject=")) {
      throw Error(ErrorCode::CorruptProfile, entry.path().string() + ": missing subject", 2);
    }
    out.emplace_back(subject.substr(8), entry.path());
  }
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      throw Error(ErrorCode::DuplicateSubject, "'" + out[i].first + "' in " +
                                                   out[i - 1].second.string() + " and " +
                                                   out[i].second.string());
    }
  }
  return out;
}

}  // namespace popa
