#include "signmix/manifest.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace signmix {

const char* to_string(Subset s) {
  switch (s) {
    case Subset::train:
      return "train";
    case Subset::test:
      return "test";
    case Subset::unassigned:
      return "unassigned";
  }
  return "unassigned";
}

Subset subset_from_string(const std::string& s) {
  if (s == "train") return Subset::train;
  if (s == "test") return Subset::test;
  if (s == "unassigned") return Subset::unassigned;
  throw std::invalid_argument("unknown subset '" + s + "'");
}

void DatasetManifest::validate() const {
  if (language.code.empty()) throw IntegrityError("manifest language tag is empty");

  std::unordered_set<std::string> gloss_ids;
  for (const auto& g : glosses) {
    if (g.id.empty()) throw IntegrityError("gloss with empty id");
    if (g.language != language) {
      throw IntegrityError("gloss '" + g.id + "' has language '" + g.language.code + "', manifest is '" +
                           language.code + "'");
    }
    if (!gloss_ids.insert(g.id).second) throw IntegrityError("duplicate gloss id '" + g.id + "'");
  }

  if (!groups.empty()) {
    std::unordered_set<std::string> group_ids;
    std::unordered_set<std::string> covered;
    for (const auto& grp : groups) {
      if (grp.id.empty()) throw IntegrityError("group with empty id");
      if (!group_ids.insert(grp.id).second) throw IntegrityError("duplicate group id '" + grp.id + "'");
      if (grp.members.empty()) throw IntegrityError("group '" + grp.id + "' has no members");
      for (const auto& member : grp.members) {
        if (!gloss_ids.count(member)) {
          throw IntegrityError("group '" + grp.id + "' references unknown gloss '" + member + "'");
        }
        if (!covered.insert(member).second) {
          throw IntegrityError("gloss '" + member + "' belongs to more than one group");
        }
      }
    }
    for (const auto& g : glosses) {
      if (!covered.count(g.id)) throw IntegrityError("gloss '" + g.id + "' is not in any group");
    }
  }

  std::unordered_set<std::string> signer_ids;
  for (const auto& s : signers) {
    if (s.id.empty()) throw IntegrityError("signer with empty id");
    if (!signer_ids.insert(s.id).second) throw IntegrityError("duplicate signer id '" + s.id + "'");
  }

  std::unordered_set<std::string> sample_ids;
  for (const auto& s : samples) {
    if (s.sample_id.empty()) throw IntegrityError("sample with empty id");
    if (!sample_ids.insert(s.sample_id).second) throw IntegrityError("duplicate sample id '" + s.sample_id + "'");
    if (!signer_ids.count(s.signer.id)) {
      throw IntegrityError("sample '" + s.sample_id + "' references unknown signer '" + s.signer.id + "'");
    }
    if (!gloss_ids.count(s.gloss)) {
      throw IntegrityError("sample '" + s.sample_id + "' references unknown gloss '" + s.gloss + "'");
    }
    if (s.language != language) {
      throw IntegrityError("sample '" + s.sample_id + "' has language '" + s.language.code + "'");
    }
    if (s.video_length < 1) throw IntegrityError("sample '" + s.sample_id + "' has video_length < 1");
    if (!(0 <= s.sign_start && s.sign_start < s.sign_end && s.sign_end <= s.video_length)) {
      throw IntegrityError("sample '" + s.sample_id + "' violates 0 <= sign_start < sign_end <= video_length");
    }
  }
}

DatasetManifest DatasetManifest::canonical() const {
  DatasetManifest out = *this;
  std::sort(out.glosses.begin(), out.glosses.end(), [](auto& a, auto& b) { return a.id < b.id; });
  for (auto& g : out.groups) std::sort(g.members.begin(), g.members.end());
  std::sort(out.groups.begin(), out.groups.end(), [](auto& a, auto& b) { return a.id < b.id; });
  std::sort(out.signers.begin(), out.signers.end(), [](auto& a, auto& b) { return a.id < b.id; });
  std::sort(out.samples.begin(), out.samples.end(),
            [](auto& a, auto& b) { return a.sample_id < b.sample_id; });
  return out;
}

Record group_record(const GroupLabel& g) {
  Record r("group");
  r.add("id", g.id);
  r.add_list("members", g.members);
  return r;
}

std::vector<Record> manifest_records(const DatasetManifest& m) {
  std::vector<Record> out;
  out.push_back(Record("manifest").add("version", 1).add("language", m.language.code));
  for (const auto& g : m.glosses) out.push_back(Record("gloss").add("id", g.id).add("language", g.language.code));
  for (const auto& g : m.groups) out.push_back(group_record(g));
  for (const auto& s : m.signers) out.push_back(Record("signer").add("id", s.id));
  for (const auto& s : m.samples) {
    Record r("sample");
    r.add("id", s.sample_id)
        .add("signer", s.signer.id)
        .add("gloss", s.gloss)
        .add("language", s.language.code)
        .add("video_length", s.video_length)
        .add("sign_start", s.sign_start)
        .add("sign_end", s.sign_end)
        .add("subset", to_string(s.subset));
    out.push_back(std::move(r));
  }
  return out;
}

DatasetManifest parse_manifest(const std::vector<NumberedRecord>& records) {
  DatasetManifest m;
  bool header = false;
  for (const auto& [line, rec] : records) {
    try {
      if (!header) {
        if (rec.kind() != "manifest") throw std::invalid_argument("first record must be 'manifest'");
        rec.expect_fields({"version", "language"});
        if (rec.get_int("version") != 1) throw std::invalid_argument("unsupported manifest version");
        m.language.code = rec.get("language");
        header = true;
        continue;
      }
      const auto& kind = rec.kind();
      if (kind == "gloss") {
        rec.expect_fields({"id", "language"});
        m.glosses.push_back({rec.get("id"), {rec.get("language")}});
      } else if (kind == "group") {
        rec.expect_fields({"id", "members"});
        m.groups.push_back({rec.get("id"), rec.get_list("members")});
      } else if (kind == "signer") {
        rec.expect_fields({"id"});
        m.signers.push_back({rec.get("id")});
      } else if (kind == "sample") {
        rec.expect_fields(
            {"id", "signer", "gloss", "language", "video_length", "sign_start", "sign_end", "subset"});
        SampleRecord s;
        s.sample_id = rec.get("id");
        s.signer.id = rec.get("signer");
        s.gloss = rec.get("gloss");
        s.language.code = rec.get("language");
        s.video_length = static_cast<int>(rec.get_int("video_length"));
        s.sign_start = static_cast<int>(rec.get_int("sign_start"));
        s.sign_end = static_cast<int>(rec.get_int("sign_end"));
        s.subset = subset_from_string(rec.get("subset"));
        m.samples.push_back(std::move(s));
      } else if (kind == "manifest") {
        throw std::invalid_argument("duplicate manifest header");
      } else {
        throw std::invalid_argument("unknown record kind '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ParseError(line, e.what());
    }
  }
  if (!header) throw ParseError(0, "missing manifest header");
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_records(path)); }

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  m.validate();
  write_records(path, manifest_records(m.canonical()));
}

std::vector<std::string> project_to_groups(const DatasetManifest& m, std::span<const std::string> labels) {
  std::unordered_map<std::string, std::string> owner;
  if (m.has_grouping()) {
    for (const auto& g : m.groups) {
      for (const auto& member : g.members) owner.emplace(member, g.id);
    }
  } else {
    for (const auto& g : m.glosses) owner.emplace(g.id, g.id);
  }
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    auto it = owner.find(label);
    if (it == owner.end()) throw std::invalid_argument("unknown gloss label '" + label + "'");
    out.push_back(it->second);
  }
  return out;
}

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  for (std::size_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], i);
}

std::size_t LabelSpace::index(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw std::out_of_range("unknown label '" + label + "'");
  return it->second;
}

LabelSpace gloss_space(const DatasetManifest& m) {
  std::vector<std::string> ids;
  for (const auto& g : m.glosses) ids.push_back(g.id);
  return LabelSpace(std::move(ids));
}

LabelSpace group_space(const DatasetManifest& m) {
  if (!m.has_grouping()) return gloss_space(m);
  std::vector<std::string> ids;
  for (const auto& g : m.groups) ids.push_back(g.id);
  return LabelSpace(std::move(ids));
}

std::vector<std::size_t> sample_classes(const DatasetManifest& m, LabelMode mode, const LabelSpace& space) {
  std::vector<std::string> glosses;
  glosses.reserve(m.samples.size());
  for (const auto& s : m.samples) glosses.push_back(s.gloss);
  auto labels = mode == LabelMode::group ? project_to_groups(m, glosses) : glosses;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(space.index(l));
  return out;
}

std::vector<SampleRecord> samples_in(const DatasetManifest& m, Subset subset) {
  std::vector<SampleRecord> out;
  for (const auto& s : m.samples) {
    if (s.subset == subset) out.push_back(s);
  }
  return out;
}

}  // namespace signmix
