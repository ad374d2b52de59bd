// Copyright 2026 The Taurus Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "taurus/case_store.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>

#include "taurus/error.hpp"
#include "taurus/rng.hpp"

namespace taurus {

namespace fs = std::filesystem;

namespace {

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(n * 2, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = kDigits[data[i] >> 4];
    out[2 * i + 1] = kDigits[data[i] & 0xf];
  }
  return out;
}

void write_all(int fd, const std::string& data, const std::string& what) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorKind::io, "write failed: " + what);
    }
    off += static_cast<std::size_t>(n);
  }
}

MediaRef media_from_json(const nlohmann::json& j) {
  return {j.at("digest").get<std::string>(), j.at("kind").get<std::string>(),
          j.at("bytes").get<std::size_t>()};
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::io, "SHA-256 failed");
  }
  return to_hex(md, len);
}

std::string new_case_id() {
  unsigned char buf[16];
  if (RAND_bytes(buf, sizeof buf) != 1) fail(ErrorKind::io, "random source unavailable");
  return to_hex(buf, sizeof buf);
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void to_json(nlohmann::json& j, const MediaRef& m) {
  j = nlohmann::json{{"digest", m.digest}, {"kind", m.kind}, {"bytes", m.bytes}};
}

void to_json(nlohmann::json& j, const CaseRecord& r) {
  nlohmann::json timeline = nlohmann::json::array();
  for (const auto& e : r.timeline) timeline.push_back({{"type", e.type}, {"index", e.index}});
  j = nlohmann::json{{"case_id", r.case_id},
                     {"created_at", r.created_at},
                     {"media", r.media},
                     {"predictions", r.predictions},
                     {"dose_plan", r.dose_plan ? nlohmann::json(*r.dose_plan) : nlohmann::json(nullptr)},
                     {"timeline", timeline}};
}

CaseStore::CaseStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "blobs", ec);
  if (ec) fail(ErrorKind::io, "cannot create case store '" + dir_.string() + "': " + ec.message());
  replay();
  log_fd_ = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd_ < 0) fail(ErrorKind::io, "cannot open '" + log_path().string() + "'");
}

CaseStore::~CaseStore() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

void CaseStore::replay() {
  const fs::path path = log_path();
  if (!fs::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  // A crash mid-append leaves a partial final line; drop it so later appends
  // start on a fresh line.
  const auto last_nl = content.rfind('\n');
  const std::size_t complete = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (complete != content.size()) {
    fs::resize_file(path, complete);
    content.resize(complete);
  }

  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < content.size()) {
    const std::size_t end = content.find('\n', start);
    const std::string line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      apply(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void CaseStore::apply(const nlohmann::json& ev) {
  const std::string op = ev.at("op").get<std::string>();
  const std::string id = ev.at("case_id").get<std::string>();
  if (op == "create") {
    if (cases_.count(id)) fail(ErrorKind::data, "duplicate case id " + id);
    CaseRecord r;
    r.case_id = id;
    r.created_at = ev.at("created_at").get<std::string>();
    cases_.emplace(id, std::move(r));
    return;
  }
  auto it = cases_.find(id);
  if (it == cases_.end()) fail(ErrorKind::not_found, "unknown case " + id);
  CaseRecord& r = it->second;
  if (op == "media") {
    r.timeline.push_back({"media", r.media.size()});
    r.media.push_back(media_from_json(ev.at("media")));
  } else if (op == "prediction") {
    r.timeline.push_back({"prediction", r.predictions.size()});
    r.predictions.push_back(prediction_from_json(ev.at("prediction")));
  } else if (op == "dose_plan") {
    r.timeline.push_back({"dose_plan", 0});
    r.dose_plan = dose_plan_from_json(ev.at("dose_plan"));
  } else {
    fail(ErrorKind::data, "unknown case log op '" + op + "'");
  }
}

void CaseStore::append(const nlohmann::json& ev) {
  apply(ev);
  write_all(log_fd_, ev.dump() + "\n", log_path().string());
}

fs::path CaseStore::blob_path(const std::string& digest) const { return dir_ / "blobs" / digest; }

MediaRef CaseStore::put_blob(std::span<const std::uint8_t> bytes, const std::string& kind) {
  MediaRef ref{sha256_hex(bytes), kind, bytes.size()};
  const fs::path dest = blob_path(ref.digest);
  if (fs::exists(dest)) return ref;
  const fs::path tmp = dest.string() + ".tmp." + new_case_id();
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "cannot write blob '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, dest, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::io, "cannot store blob " + ref.digest);
  }
  return ref;
}

std::string CaseStore::create_locked() {
  std::string id;
  do {
    id = new_case_id();
  } while (cases_.count(id));
  append({{"op", "create"}, {"case_id", id}, {"created_at", utc_timestamp()}});
  return id;
}

std::string CaseStore::create_case() {
  std::lock_guard lock(mu_);
  return create_locked();
}

std::string CaseStore::record_prediction(const std::optional<std::string>& case_id,
                                         const MediaRef& media, const Prediction& prediction) {
  std::lock_guard lock(mu_);
  std::string id;
  if (case_id) {
    if (!cases_.count(*case_id)) fail(ErrorKind::not_found, "unknown case " + *case_id);
    id = *case_id;
  } else {
    id = create_locked();
  }
  append({{"op", "media"}, {"case_id", id}, {"media", media}});
  append({{"op", "prediction"}, {"case_id", id}, {"prediction", prediction}});
  return id;
}

void CaseStore::record_dose_plan(const std::string& case_id, const DosePlan& plan) {
  std::lock_guard lock(mu_);
  if (!cases_.count(case_id)) fail(ErrorKind::not_found, "unknown case " + case_id);
  append({{"op", "dose_plan"}, {"case_id", case_id}, {"dose_plan", plan}});
}

bool CaseStore::contains(const std::string& case_id) const {
  std::lock_guard lock(mu_);
  return cases_.count(case_id) > 0;
}

std::optional<CaseRecord> CaseStore::get(const std::string& case_id) const {
  std::lock_guard lock(mu_);
  auto it = cases_.find(case_id);
  if (it == cases_.end()) return std::nullopt;
  return it->second;
}

std::size_t CaseStore::size() const {
  std::lock_guard lock(mu_);
  return cases_.size();
}

nlohmann::json CaseStore::snapshot() const {
  std::lock_guard lock(mu_);
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, r] : cases_) j[id] = r;
  return j;
}

}  // namespace taurus
