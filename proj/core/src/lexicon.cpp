#include <set>
#include <string>

#include "reqgen/corpus.hpp"

namespace reqgen {

namespace {

// Closed-class exclusion list for the nominal-run heuristic: determiners,
// pronouns, prepositions, conjunctions, auxiliaries/modals, and the verbs and
// adverbs that dominate requirement statements. Tokens outside this list (and
// containing at least one alphanumeric character) count as nominal.
const std::set<std::string>& lexicon() {
  static const std::set<std::string> words = {
      // determiners and quantifiers
      "the", "a", "an", "this", "that", "these", "those", "each", "every", "any", "some", "no",
      "all", "both", "either", "neither", "such", "another", "other", "its", "their", "his",
      "her", "our", "your", "my",
      // pronouns
      "it", "they", "he", "she", "we", "you", "i", "them", "him", "us", "me", "itself",
      "themselves", "which", "who", "whom", "whose", "what",
      // prepositions
      "of", "in", "on", "at", "by", "for", "with", "from", "to", "into", "onto", "over",
      "under", "above", "below", "between", "among", "through", "during", "within", "without",
      "against", "about", "across", "after", "before", "behind", "beyond", "near", "upon",
      "per", "via", "toward", "towards", "until", "since", "along", "around", "off", "out",
      "up", "down",
      // conjunctions and clause markers
      "and", "or", "but", "nor", "so", "yet", "if", "then", "else", "when", "whenever",
      "while", "whereas", "because", "although", "though", "unless", "once", "as", "than",
      "whether", "where", "why", "how",
      // auxiliaries and modals
      "shall", "should", "must", "will", "would", "may", "might", "can", "could", "need",
      "ought", "do", "does", "did", "done", "be", "is", "are", "was", "were", "been", "being",
      "am", "has", "have", "had", "having", "not",
      // frequent requirement verbs
      "provide", "provides", "provided", "display", "displays", "displayed", "generate",
      "generates", "generated", "compute", "computes", "computed", "send", "sends", "sent",
      "receive", "receives", "received", "store", "stores", "stored", "support", "supports",
      "supported", "allow", "allows", "allowed", "enable", "enables", "enabled", "perform",
      "performs", "performed", "respond", "responds", "responded", "return", "returns",
      "returned", "set", "sets", "use", "uses", "used", "make", "makes", "made", "take",
      "takes", "taken", "give", "given", "gives", "move", "moves", "moved", "report",
      "reports", "reported", "update", "updates", "updated", "maintain", "maintains",
      "maintained", "ensure", "ensures", "ensured", "include", "includes", "included",
      "contain", "contains", "contained", "define", "defines", "defined", "specify",
      "specifies", "specified", "activate", "activates", "activated", "execute", "executes",
      "executed", "operate", "operates", "operated", "notify", "notifies", "notified",
      "require", "requires", "required", "assigned", "assign", "assigns", "issue", "issued",
      "apply", "applied", "applies",
      // frequent adverbs and fillers
      "only", "also", "very", "more", "most", "less", "least", "too", "again", "always",
      "never", "often", "currently", "respectively", "immediately", "automatically",
      "manually", "successfully", "corresponding", "current", "new", "same", "different",
      "available", "able", "unable", "possible", "according", "least", "greater", "less"};
  return words;
}

}  // namespace

bool is_closed_class(const std::string& token) { return lexicon().count(token) > 0; }

}  // namespace reqgen
