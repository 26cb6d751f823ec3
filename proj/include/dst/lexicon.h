#ifndef DST_LEXICON_H_
#define DST_LEXICON_H_

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dst/schema.h"

namespace dst {

// term -> synonyms, both normalized (lowercase, whitespace collapsed).
// Lookup is directional: "a -> b" does not imply "b -> a".
class SynonymLexicon {
 public:
  // Adds term -> synonym from `source`. Self-pairs are dropped; repeated
  // pairs merge their source tags. An empty synonym registers the term
  // with no expansions.
  void Add(std::string_view term, std::string_view synonym, std::string_view source,
           double score = 1.0);

  const std::set<std::string>& Lookup(std::string_view term) const;
  bool Contains(std::string_view term) const;
  std::set<std::string> Sources(std::string_view term, std::string_view synonym) const;

  size_t term_count() const { return entries_.size(); }
  size_t pair_count() const;
  bool empty() const { return entries_.empty(); }

  // Sorted by term, then synonym; one line per (term, synonym, source).
  std::string ToTsv() const;

  const std::unordered_map<std::string, std::set<std::string>>& entries() const {
    return entries_;
  }

 private:
  std::unordered_map<std::string, std::set<std::string>> entries_;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> provenance_;
};

// Tab-separated `term<TAB>synonym<TAB>source<TAB>score`. Blank lines and
// lines starting with '#' are skipped. Throws ParseError with the line
// number for malformed lines.
SynonymLexicon ParseLexicon(std::string_view text, const std::string& source_name = "");
SynonymLexicon LoadLexicon(const std::string& path);
void SaveLexicon(const SynonymLexicon& lexicon, const std::string& path);

enum class ProviderKind { kSynonymApi, kBackTranslation };

std::string_view ProviderKindName(ProviderKind kind);
ProviderKind ParseProviderKind(std::string_view name);

// Source of expansions for a term. Implementations must be deterministic
// for a fixed cache.
class ExpansionProvider {
 public:
  virtual ~ExpansionProvider() = default;
  virtual const std::string& name() const = 0;
  virtual ProviderKind kind() const = 0;
  // Top-k expansions ordered by descending score. Throws CacheMissError
  // when the term is unknown to the provider.
  virtual std::vector<std::pair<std::string, double>> ExpandScored(std::string_view term,
                                                                   size_t k) const = 0;
  std::vector<std::string> Expand(std::string_view term, size_t k) const;
};

// Provider backed by a persisted cache file in lexicon format.
class CachedProvider : public ExpansionProvider {
 public:
  CachedProvider(std::string name, ProviderKind kind, const std::string& cache_path);
  CachedProvider(std::string name, ProviderKind kind,
                 std::map<std::string, std::vector<std::pair<std::string, double>>> cache);

  const std::string& name() const override { return name_; }
  ProviderKind kind() const override { return kind_; }
  std::vector<std::pair<std::string, double>> ExpandScored(std::string_view term,
                                                           size_t k) const override;

 private:
  std::string name_;
  ProviderKind kind_;
  // term -> (expansion, score), file order preserved for equal scores.
  std::map<std::string, std::vector<std::pair<std::string, double>>> cache_;
};

// Fetches expansions from an HTTP endpoint:
//   GET <base>/expand?term=<term>&k=<k>
//   -> {"term": "...", "expansions": [{"text": "...", "score": 0.9}, ...]}
// Used offline to populate caches; a 404 is reported as a cache miss.
class HttpProvider : public ExpansionProvider {
 public:
  HttpProvider(std::string name, ProviderKind kind, std::string base_url, int timeout_ms = 10000);

  const std::string& name() const override { return name_; }
  ProviderKind kind() const override { return kind_; }
  std::vector<std::pair<std::string, double>> ExpandScored(std::string_view term,
                                                           size_t k) const override;

 private:
  std::string name_;
  ProviderKind kind_;
  std::string base_url_;
  int timeout_ms_;
};

// Queries `provider` for every term and writes a cache file in lexicon
// format. Terms with no expansions are recorded with an empty synonym so
// later cache lookups do not miss.
void PopulateCache(const HttpProvider& provider, const std::vector<std::string>& terms, size_t k,
                   const std::string& path);

// Union of each provider's top-k expansions, normalized, without the term.
std::set<std::string> ExpandTerm(std::string_view term,
                                 const std::vector<const ExpansionProvider*>& providers, size_t k);

// Terms the lexicon is built over: content words of every slot
// description and every Text-slot possible value, normalized.
std::vector<std::string> LexiconTerms(const Schema& schema);

// Throws Error listing every term/provider pair that failed.
SynonymLexicon BuildLexicon(const Schema& schema,
                            const std::vector<const ExpansionProvider*>& providers, size_t k);

}  // namespace dst

#endif  // DST_LEXICON_H_
