#include "dst/lexicon.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dst/errors.h"
#include "dst/text.h"
#include "httplib.h"
#include "json.hpp"

namespace dst {

namespace {

const std::set<std::string>& EmptySet() {
  static const std::set<std::string> kEmpty;
  return kEmpty;
}

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct LexiconLine {
  std::string term;
  std::string synonym;
  std::string source;
  double score = 1.0;
};

// Calls `fn` for each record; throws ParseError with the 1-based line.
template <typename Fn>
void ForEachRecord(std::string_view text, const std::string& source_name, Fn fn) {
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Trim(line).empty() || line.front() == '#') continue;
    auto fields = SplitTabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw ParseError(source_name, line_no, "",
                       "expected term<TAB>synonym<TAB>source[<TAB>score], got " +
                           std::to_string(fields.size()) + " fields");
    }
    LexiconLine rec;
    rec.term = NormalizeText(fields[0]);
    rec.synonym = NormalizeText(fields[1]);
    rec.source = std::string(Trim(fields[2]));
    if (rec.term.empty()) throw ParseError(source_name, line_no, "term", "empty term");
    if (rec.source.empty()) throw ParseError(source_name, line_no, "source", "empty source");
    if (fields.size() == 4) {
      std::string_view s = Trim(fields[3]);
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), rec.score);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(rec.score)) {
        throw ParseError(source_name, line_no, "score", "not a number: '" + std::string(s) + "'");
      }
    }
    fn(rec);
  }
}

std::string FormatScore(double score) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), score);
  return std::string(buf, ptr);
}

}  // namespace

void SynonymLexicon::Add(std::string_view term, std::string_view synonym, std::string_view source,
                         double score) {
  std::string t = NormalizeText(term);
  std::string s = NormalizeText(synonym);
  if (t.empty()) return;
  auto& syns = entries_[t];
  if (s.empty() || s == t) return;
  syns.insert(s);
  auto& tags = provenance_[{t, s}];
  auto it = tags.find(std::string(source));
  if (it == tags.end() || score > it->second) tags[std::string(source)] = score;
}

const std::set<std::string>& SynonymLexicon::Lookup(std::string_view term) const {
  auto it = entries_.find(NormalizeText(term));
  return it == entries_.end() ? EmptySet() : it->second;
}

bool SynonymLexicon::Contains(std::string_view term) const {
  return entries_.count(NormalizeText(term)) > 0;
}

std::set<std::string> SynonymLexicon::Sources(std::string_view term,
                                              std::string_view synonym) const {
  std::set<std::string> out;
  auto it = provenance_.find({NormalizeText(term), NormalizeText(synonym)});
  if (it == provenance_.end()) return out;
  for (const auto& [tag, score] : it->second) out.insert(tag);
  return out;
}

size_t SynonymLexicon::pair_count() const {
  size_t n = 0;
  for (const auto& [term, syns] : entries_) n += syns.size();
  return n;
}

std::string SynonymLexicon::ToTsv() const {
  std::vector<std::string> terms;
  terms.reserve(entries_.size());
  for (const auto& [term, syns] : entries_) terms.push_back(term);
  std::sort(terms.begin(), terms.end());
  std::string out;
  for (const auto& term : terms) {
    const auto& syns = entries_.at(term);
    if (syns.empty()) {
      out += term + "\t\tnone\t0\n";
      continue;
    }
    for (const auto& syn : syns) {
      for (const auto& [tag, score] : provenance_.at({term, syn})) {
        out += term + "\t" + syn + "\t" + tag + "\t" + FormatScore(score) + "\n";
      }
    }
  }
  return out;
}

SynonymLexicon ParseLexicon(std::string_view text, const std::string& source_name) {
  SynonymLexicon lex;
  ForEachRecord(text, source_name, [&](const LexiconLine& rec) {
    lex.Add(rec.term, rec.synonym, rec.source, rec.score);
  });
  return lex;
}

SynonymLexicon LoadLexicon(const std::string& path) { return ParseLexicon(ReadFile(path), path); }

void SaveLexicon(const SynonymLexicon& lexicon, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << lexicon.ToTsv();
  if (!out) throw Error("write failed for '" + path + "'");
}

std::string_view ProviderKindName(ProviderKind kind) {
  return kind == ProviderKind::kSynonymApi ? "synonym-api" : "back-translation";
}

ProviderKind ParseProviderKind(std::string_view name) {
  if (name == "synonym-api") return ProviderKind::kSynonymApi;
  if (name == "back-translation") return ProviderKind::kBackTranslation;
  throw UsageError("unknown provider kind '" + std::string(name) +
                   "' (expected synonym-api or back-translation)");
}

std::vector<std::string> ExpansionProvider::Expand(std::string_view term, size_t k) const {
  std::vector<std::string> out;
  for (auto& [text, score] : ExpandScored(term, k)) out.push_back(std::move(text));
  return out;
}

CachedProvider::CachedProvider(std::string name, ProviderKind kind, const std::string& cache_path)
    : name_(std::move(name)), kind_(kind) {
  ForEachRecord(ReadFile(cache_path), cache_path, [&](const LexiconLine& rec) {
    auto& list = cache_[rec.term];
    if (!rec.synonym.empty()) list.emplace_back(rec.synonym, rec.score);
  });
}

CachedProvider::CachedProvider(
    std::string name, ProviderKind kind,
    std::map<std::string, std::vector<std::pair<std::string, double>>> cache)
    : name_(std::move(name)), kind_(kind) {
  for (auto& [term, list] : cache) {
    auto& dst = cache_[NormalizeText(term)];
    for (auto& [text, score] : list) dst.emplace_back(NormalizeText(text), score);
  }
}

std::vector<std::pair<std::string, double>> CachedProvider::ExpandScored(std::string_view term,
                                                                         size_t k) const {
  auto it = cache_.find(NormalizeText(term));
  if (it == cache_.end()) throw CacheMissError(name_, std::string(term));
  std::vector<std::pair<std::string, double>> ranked = it->second;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

HttpProvider::HttpProvider(std::string name, ProviderKind kind, std::string base_url,
                           int timeout_ms)
    : name_(std::move(name)), kind_(kind), base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<std::pair<std::string, double>> HttpProvider::ExpandScored(std::string_view term,
                                                                       size_t k) const {
  // Split "http://host:port/prefix" into the client origin and a path prefix.
  std::string origin = base_url_;
  std::string prefix;
  size_t scheme = origin.find("://");
  size_t slash = origin.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    prefix = origin.substr(slash);
    origin.resize(slash);
  }
  httplib::Client client(origin);
  client.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
  client.set_read_timeout(std::chrono::milliseconds(timeout_ms_));
  httplib::Params params{{"term", std::string(term)}, {"k", std::to_string(k)}};
  auto res = client.Get(prefix + "/expand", params, httplib::Headers{});
  if (!res) {
    throw TransportError("provider '" + name_ + "': request to " + base_url_ + " failed (" +
                         httplib::to_string(res.error()) + ")");
  }
  if (res->status == 404) throw CacheMissError(name_, std::string(term));
  if (res->status != 200) {
    throw TransportError("provider '" + name_ + "': HTTP " + std::to_string(res->status));
  }
  std::vector<std::pair<std::string, double>> out;
  try {
    auto body = nlohmann::json::parse(res->body);
    for (const auto& e : body.at("expansions")) {
      out.emplace_back(NormalizeText(e.at("text").get<std::string>()), e.value("score", 1.0));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError("provider '" + name_ + "': malformed response: " + e.what());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (out.size() > k) out.resize(k);
  return out;
}

void PopulateCache(const HttpProvider& provider, const std::vector<std::string>& terms, size_t k,
                   const std::string& path) {
  std::ostringstream out;
  out << "# cache for provider " << provider.name() << " (" << ProviderKindName(provider.kind())
      << "), k=" << k << "\n";
  for (const auto& term : terms) {
    std::string t = NormalizeText(term);
    auto expansions = provider.ExpandScored(t, k);
    if (expansions.empty()) out << t << "\t\t" << provider.name() << "\t0\n";
    for (const auto& [text, score] : expansions) {
      out << t << "\t" << text << "\t" << provider.name() << "\t" << FormatScore(score) << "\n";
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open '" + path + "' for writing");
  file << out.str();
}

std::set<std::string> ExpandTerm(std::string_view term,
                                 const std::vector<const ExpansionProvider*>& providers, size_t k) {
  std::set<std::string> out;
  if (k == 0) return out;
  const std::string t = NormalizeText(term);
  for (const ExpansionProvider* p : providers) {
    for (const auto& e : p->Expand(t, k)) {
      std::string n = NormalizeText(e);
      if (!n.empty() && n != t) out.insert(std::move(n));
    }
  }
  return out;
}

std::vector<std::string> LexiconTerms(const Schema& schema) {
  std::vector<std::string> terms;
  std::set<std::string> seen;
  auto add = [&](std::string t) {
    if (!t.empty() && seen.insert(t).second) terms.push_back(std::move(t));
  };
  for (const auto& svc : schema.services) {
    for (const auto& slot : svc.slots) {
      for (auto& w : ContentWords(slot.description)) add(std::move(w));
      // Boolean and numeric values have no useful paraphrases.
      if (ClassifySlot(slot) != SlotKind::kText) continue;
      for (const auto& v : slot.possible_values) add(NormalizeText(v));
    }
  }
  return terms;
}

SynonymLexicon BuildLexicon(const Schema& schema,
                            const std::vector<const ExpansionProvider*>& providers, size_t k) {
  SynonymLexicon lex;
  std::vector<std::string> failures;
  for (const auto& term : LexiconTerms(schema)) {
    lex.Add(term, "", "schema");
    if (k == 0) continue;
    for (const ExpansionProvider* p : providers) {
      try {
        for (const auto& [text, score] : p->ExpandScored(term, k)) {
          lex.Add(term, text, p->name(), score);
        }
      } catch (const Error& e) {
        failures.push_back("'" + term + "' via " + p->name() + ": " + e.what());
      }
    }
  }
  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " lexicon expansion(s) failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw Error(msg);
  }
  return lex;
}

}  // namespace dst
