#include "insert/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "insert/errors.hpp"
#include "insert/io_util.hpp"

using nlohmann::json;

namespace insert {

namespace {

const char kMagic[9] = "INSRTDAT";
constexpr std::uint32_t kVersion = 1;

// gzgets with a growing buffer; gzopen reads plain files transparently.
bool read_line(gzFile f, std::string& line) {
  line.clear();
  char buf[4096];
  while (gzgets(f, buf, sizeof(buf)) != nullptr) {
    line += buf;
    if (!line.empty() && line.back() == '\n') {
      line.pop_back();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
  }
  return !line.empty();
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t ceil_fraction(double frac, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9));
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split '" + name + "' (train|valid|test)");
}

int Vocab::add(const std::string& id) {
  int idx = static_cast<int>(id_of.size());
  id_of.push_back(id);
  index_of[id] = idx;
  return idx;
}

int Vocab::add_or_get(const std::string& id) {
  auto it = index_of.find(id);
  return it == index_of.end() ? add(id) : it->second;
}

int Vocab::lookup(const std::string& id) const {
  auto it = index_of.find(id);
  return it == index_of.end() ? -1 : it->second;
}

std::vector<Interaction> load_interactions(const std::string& path, const FormatSpec& fmt) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DataError("cannot open input file: " + path);

  const int max_col = std::max({fmt.user_col, fmt.item_col, fmt.time_col});
  std::vector<Interaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (read_line(f, line)) {
    ++line_no;
    if (line_no <= static_cast<std::size_t>(fmt.skip_rows)) continue;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line, fmt.delimiter);
    if (static_cast<int>(fields.size()) <= max_col) {
      gzclose(f);
      throw DataError("line " + std::to_string(line_no) + ": expected at least " +
                      std::to_string(max_col + 1) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Interaction it;
    it.user_id = fields[static_cast<std::size_t>(fmt.user_col)];
    it.item_id = fields[static_cast<std::size_t>(fmt.item_col)];
    const std::string& ts = fields[static_cast<std::size_t>(fmt.time_col)];
    try {
      std::size_t pos = 0;
      it.timestamp = std::stoll(ts, &pos);
      if (pos != ts.size()) throw std::invalid_argument(ts);
    } catch (const std::exception&) {
      gzclose(f);
      throw DataError("line " + std::to_string(line_no) + ": bad timestamp '" + ts + "'");
    }
    if (it.timestamp < 0) {
      gzclose(f);
      throw DataError("line " + std::to_string(line_no) + ": negative timestamp");
    }
    if (it.user_id.empty() || it.item_id.empty()) {
      gzclose(f);
      throw DataError("line " + std::to_string(line_no) + ": empty user or item id");
    }
    it.seq = out.size();
    out.push_back(std::move(it));
  }
  gzclose(f);
  if (out.empty()) throw DataError("empty dataset: " + path);
  std::stable_sort(out.begin(), out.end(), [](const Interaction& a, const Interaction& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.timestamp < b.timestamp;
  });
  return out;
}

std::vector<RawSession> sessionize(const std::vector<Interaction>& interactions,
                                   std::int64_t idle_threshold_s) {
  std::vector<RawSession> out;
  for (const Interaction& it : interactions) {
    bool fresh = out.empty() || out.back().user_id != it.user_id ||
                 it.timestamp - out.back().events.back().timestamp > idle_threshold_s;
    if (fresh) {
      RawSession s;
      s.user_id = it.user_id;
      s.start_time = it.timestamp;
      out.push_back(std::move(s));
    }
    out.back().events.push_back(RawEvent{it.item_id, it.timestamp, it.seq});
  }
  return out;
}

std::vector<RawSession> filter_corpus(std::vector<RawSession> sessions, const FilterConfig& cfg) {
  bool changed = true;
  while (changed) {
    changed = false;

    std::unordered_map<std::string, std::size_t> item_freq;
    std::unordered_map<std::string, std::size_t> user_freq;
    for (const RawSession& s : sessions) {
      user_freq[s.user_id] += s.events.size();
      for (const RawEvent& e : s.events) ++item_freq[e.item_id];
    }

    std::vector<RawSession> next;
    next.reserve(sessions.size());
    for (RawSession& s : sessions) {
      if (user_freq[s.user_id] < cfg.min_freq) {
        changed = true;
        continue;
      }
      std::vector<RawEvent> kept;
      kept.reserve(s.events.size());
      for (RawEvent& e : s.events) {
        if (item_freq[e.item_id] < cfg.min_freq) {
          changed = true;
        } else {
          kept.push_back(std::move(e));
        }
      }
      if (kept.size() < 2 || kept.size() > cfg.max_session_len) {
        changed = true;
        continue;
      }
      s.events = std::move(kept);
      s.start_time = s.events.front().timestamp;
      next.push_back(std::move(s));
    }
    sessions = std::move(next);
  }
  if (sessions.empty()) throw DataError("all interactions were filtered out");
  return sessions;
}

std::vector<int> SessionDataset::user_sessions(int user, Split split) const {
  std::vector<int> out;
  if (user < 0 || user >= static_cast<int>(sessions_by_user.size())) return out;
  for (int idx : sessions_by_user[static_cast<std::size_t>(user)]) {
    if (at(idx).split == split) out.push_back(idx);
  }
  return out;
}

SessionDataset build_dataset(const std::vector<RawSession>& filtered,
                             const PreprocessConfig& cfg) {
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0) ||
      !(cfg.valid_fraction > 0.0 && cfg.valid_fraction < 1.0) ||
      cfg.test_fraction + cfg.valid_fraction >= 1.0) {
    throw ConfigError("split fractions must lie in (0,1) and sum to less than 1");
  }

  SessionDataset ds;
  ds.config = cfg;
  ds.items.add("<pad>");

  // Vocabulary by first appearance in global time order (ties: input order).
  struct Seen {
    std::int64_t ts;
    std::size_t seq;
    const std::string* user;
    const std::string* item;
  };
  std::vector<Seen> order;
  for (const RawSession& s : filtered) {
    for (const RawEvent& e : s.events) order.push_back(Seen{e.timestamp, e.seq, &s.user_id, &e.item_id});
  }
  std::sort(order.begin(), order.end(),
            [](const Seen& a, const Seen& b) { return a.ts != b.ts ? a.ts < b.ts : a.seq < b.seq; });
  for (const Seen& e : order) {
    ds.users.add_or_get(*e.user);
    ds.items.add_or_get(*e.item);
  }

  // Group sessions per user, keep time order.
  std::vector<std::vector<const RawSession*>> per_user(ds.users.size());
  for (const RawSession& s : filtered) {
    per_user[static_cast<std::size_t>(ds.users.lookup(s.user_id))].push_back(&s);
  }
  for (auto& list : per_user) {
    std::stable_sort(list.begin(), list.end(), [](const RawSession* a, const RawSession* b) {
      return a->start_time != b->start_time ? a->start_time < b->start_time
                                            : a->events.front().seq < b->events.front().seq;
    });
  }

  ds.sessions_by_user.resize(ds.users.size());
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    const auto& list = per_user[u];
    const std::size_t n = list.size();
    std::size_t n_test = 0, n_valid = 0;
    if (n >= 3) {
      n_test = ceil_fraction(cfg.test_fraction, n);
      n_valid = ceil_fraction(cfg.valid_fraction, n);
      // keep at least one training session
      while (n_test + n_valid >= n) {
        if (n_valid > 0) {
          --n_valid;
        } else {
          --n_test;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      Session s;
      s.user = static_cast<int>(u);
      s.start_time = list[i]->start_time;
      s.ordinal = static_cast<int>(i);
      if (i >= n - n_test) {
        s.split = Split::test;
      } else if (i >= n - n_test - n_valid) {
        s.split = Split::valid;
      } else {
        s.split = Split::train;
      }
      s.items.reserve(list[i]->events.size());
      for (const RawEvent& e : list[i]->events) s.items.push_back(ds.items.lookup(e.item_id));
      ds.sessions_by_user[u].push_back(static_cast<int>(ds.sessions.size()));
      ds.sessions.push_back(std::move(s));
    }
  }

  ds.stats = corpus_stats(ds);
  return ds;
}

SessionDataset preprocess(const std::string& path, const PreprocessConfig& cfg) {
  std::vector<Interaction> interactions = load_interactions(path, cfg.format);
  std::vector<RawSession> sessions = sessionize(interactions, cfg.idle_threshold_s);
  FilterConfig fcfg{cfg.min_freq, cfg.max_session_len};
  sessions = filter_corpus(std::move(sessions), fcfg);
  SessionDataset ds = build_dataset(sessions, cfg);
  ds.source_hash = hash_file(path);
  return ds;
}

CorpusStats corpus_stats(const SessionDataset& ds) {
  CorpusStats st;
  st.users = ds.users.size();
  st.items = ds.items.size() > 0 ? ds.items.size() - 1 : 0;  // exclude <pad>
  st.sessions = ds.sessions.size();
  for (const Session& s : ds.sessions) {
    st.interactions += s.items.size();
    switch (s.split) {
      case Split::train: ++st.train_sessions; break;
      case Split::valid: ++st.valid_sessions; break;
      case Split::test: ++st.test_sessions; break;
    }
  }
  if (st.sessions > 0) {
    st.interactions_per_session =
        static_cast<double>(st.interactions) / static_cast<double>(st.sessions);
  }
  if (st.users > 0) {
    st.interactions_per_user =
        static_cast<double>(st.interactions) / static_cast<double>(st.users);
  }
  return st;
}

namespace {

json stats_to_json(const CorpusStats& st) {
  return json{{"users", st.users},
              {"items", st.items},
              {"sessions", st.sessions},
              {"interactions", st.interactions},
              {"interactions_per_session", st.interactions_per_session},
              {"interactions_per_user", st.interactions_per_user},
              {"train_sessions", st.train_sessions},
              {"valid_sessions", st.valid_sessions},
              {"test_sessions", st.test_sessions}};
}

json config_to_json(const PreprocessConfig& cfg) {
  return json{{"idle_threshold_s", cfg.idle_threshold_s},
              {"min_freq", cfg.min_freq},
              {"max_session_len", cfg.max_session_len},
              {"test_fraction", cfg.test_fraction},
              {"valid_fraction", cfg.valid_fraction},
              {"delimiter", std::string(1, cfg.format.delimiter)},
              {"user_col", cfg.format.user_col},
              {"item_col", cfg.format.item_col},
              {"time_col", cfg.format.time_col},
              {"skip_rows", cfg.format.skip_rows}};
}

PreprocessConfig config_from_json(const json& j) {
  PreprocessConfig cfg;
  cfg.idle_threshold_s = j.at("idle_threshold_s").get<std::int64_t>();
  cfg.min_freq = j.at("min_freq").get<std::size_t>();
  cfg.max_session_len = j.at("max_session_len").get<std::size_t>();
  cfg.test_fraction = j.at("test_fraction").get<double>();
  cfg.valid_fraction = j.at("valid_fraction").get<double>();
  cfg.format.delimiter = j.at("delimiter").get<std::string>().at(0);
  cfg.format.user_col = j.at("user_col").get<int>();
  cfg.format.item_col = j.at("item_col").get<int>();
  cfg.format.time_col = j.at("time_col").get<int>();
  cfg.format.skip_rows = j.at("skip_rows").get<int>();
  return cfg;
}

}  // namespace

void save_dataset(const std::string& path, const SessionDataset& ds) {
  json manifest;
  manifest["format_version"] = kVersion;
  manifest["users"] = ds.users.id_of;
  manifest["items"] = ds.items.id_of;
  manifest["config"] = config_to_json(ds.config);
  manifest["stats"] = stats_to_json(ds.stats);
  manifest["source_hash"] = ds.source_hash;

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open dataset for writing: " + path);
  os.write(kMagic, 8);
  write_u32(os, kVersion);
  write_bytes(os, manifest.dump());
  write_u64(os, ds.sessions.size());
  for (const Session& s : ds.sessions) {
    write_u32(os, static_cast<std::uint32_t>(s.user));
    write_u32(os, static_cast<std::uint32_t>(s.ordinal));
    os.put(static_cast<char>(s.split));
    write_i64(os, s.start_time);
    write_u32(os, static_cast<std::uint32_t>(s.items.size()));
    for (int item : s.items) write_u32(os, static_cast<std::uint32_t>(item));
  }
  if (!os) throw DataError("write failed: " + path);
}

SessionDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open dataset: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != kMagic) throw DataError("not a dataset file: " + path);
  std::uint32_t version = read_u32(is);
  if (version != kVersion) {
    throw DataError("unsupported dataset version " + std::to_string(version));
  }
  json manifest = json::parse(read_bytes(is));

  SessionDataset ds;
  for (const auto& id : manifest.at("users")) ds.users.add(id.get<std::string>());
  for (const auto& id : manifest.at("items")) ds.items.add(id.get<std::string>());
  ds.config = config_from_json(manifest.at("config"));
  ds.source_hash = manifest.value("source_hash", "");

  std::uint64_t count = read_u64(is);
  ds.sessions_by_user.resize(ds.users.size());
  for (std::uint64_t i = 0; i < count; ++i) {
    Session s;
    s.user = static_cast<int>(read_u32(is));
    s.ordinal = static_cast<int>(read_u32(is));
    int split = is.get();
    if (split < 0 || split > 2) throw DataError("corrupt dataset: bad split tag");
    s.split = static_cast<Split>(split);
    s.start_time = read_i64(is);
    std::uint32_t len = read_u32(is);
    s.items.reserve(len);
    for (std::uint32_t j = 0; j < len; ++j) {
      int item = static_cast<int>(read_u32(is));
      if (item <= 0 || item >= static_cast<int>(ds.items.size())) {
        throw DataError("corrupt dataset: item index out of range");
      }
      s.items.push_back(item);
    }
    if (s.user < 0 || s.user >= static_cast<int>(ds.users.size())) {
      throw DataError("corrupt dataset: user index out of range");
    }
    ds.sessions_by_user[static_cast<std::size_t>(s.user)].push_back(static_cast<int>(i));
    ds.sessions.push_back(std::move(s));
  }
  ds.stats = corpus_stats(ds);
  return ds;
}

std::string stats_json(const SessionDataset& ds) {
  json j = stats_to_json(ds.stats);
  j["source_hash"] = ds.source_hash;
  return j.dump(2);
}

}  // namespace insert
