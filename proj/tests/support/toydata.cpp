#include "support/toydata.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace reqgen::test {

std::vector<Triple> toy_triples() {
  return {
      {"uav", "subClassOf", "aircraft"},
      {"quadcopter", "subClassOf", "uav"},
      {"simulator", "subClassOf", "ground station"},
      {"internal simulator", "subClassOf", "simulator"},
      {"camera", "subClassOf", "sensor"},
      {"altimeter", "subClassOf", "sensor"},
      {"battery", "subClassOf", "power unit"},
      {"gps", "subClassOf", "sensor"},
      {"landing", "hasDomain", "uav"},
      {"landing", "hasRange", "ground"},
      {"monitoring", "hasDomain", "operator"},
      {"monitoring", "hasRange", "uav"},
      {"charging", "hasDomain", "battery"},
      {"charging", "hasRange", "power unit"},
      {"aircraft", "hasSuperClasses", "vehicle"},
      {"landing", "subPropertyOf", "maneuver"},
      {"uav", "controls", "camera"},
      {"uav", "controls", "altimeter"},
      {"operator", "commands", "uav"},
      {"ground station", "tracks", "uav"},
      {"sensor", "reports to", "ground station"},
      {"altitude", "measured by", "altimeter"},
      {"ground", "subClassOf", "terrain"},
      {"waypoint", "subClassOf", "location"},
      {"uav", "flies to", "waypoint"},
  };
}

OntologyGraph toy_graph() {
  OntologyGraph graph;
  for (auto& t : toy_triples()) graph.add_triple(t);
  return graph;
}

void write_toy_ontology(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& t : toy_triples()) {
    nlohmann::json line{{"s", t.subject}, {"r", t.relation}, {"o", t.object}};
    out << line.dump() << '\n';
  }
}

std::vector<RequirementRecord> toy_records(int count) {
  struct Row {
    const char* id;
    const char* text;
    std::vector<const char*> keywords;
  };
  // Keyword combinations are unique so a small model can memorize the set.
  const std::vector<Row> rows = {
      {"r01", "The uav shall land on the ground when commanded.", {"uav", "ground"}},
      {"r02", "The internal simulator shall compute the landing position.",
       {"internal simulator", "landing"}},
      {"r03", "The operator shall monitor the uav altitude.", {"operator", "altitude"}},
      {"r04", "The camera shall record the terrain below the uav.", {"camera", "terrain"}},
      {"r05", "The battery shall power the gps sensor.", {"battery", "gps"}},
      {"r06", "The ground station shall track every uav position.",
       {"ground station", "position"}},
      {"r07", "The altimeter shall report the altitude to the ground station.",
       {"altimeter", "ground station"}},
      {"r08", "The uav shall fly to the waypoint at a safe altitude.", {"waypoint", "altitude"}},
      {"r09", "The simulator shall display the uav location.", {"simulator", "location"}},
      {"r10", "The gps shall send the position to the operator.", {"gps", "operator"}},
      {"r11", "The quadcopter shall hover above the landing zone.",
       {"quadcopter", "landing zone"}},
      {"r12", "The sensor shall detect obstacles near the ground.", {"sensor", "obstacles"}},
      {"r13", "The power unit shall charge the battery overnight.", {"power unit", "battery"}},
      {"r14", "The operator shall command the uav to land.", {"operator", "uav"}},
      {"r15", "The camera shall stream video to the ground station.",
       {"camera", "ground station"}},
      {"r16", "The uav shall report the battery level to the operator.",
       {"battery level", "operator"}},
      {"r17", "The internal simulator shall move the uav to the ground altitude.",
       {"internal simulator", "ground altitude"}},
      {"r18", "The ground station shall log every waypoint of the mission.",
       {"ground station", "mission"}},
      {"r19", "The altimeter shall measure the altitude above the terrain.",
       {"altimeter", "terrain"}},
      {"r20", "The uav shall return to the ground station when the battery is low.",
       {"uav", "ground station", "battery"}},
      {"r21", "The simulator shall predict the landing on the ground.",
       {"simulator", "landing", "ground"}},
      {"r22", "The operator shall select a waypoint for the quadcopter.",
       {"operator", "waypoint", "quadcopter"}},
      {"r23", "The gps shall update the position of the aircraft.", {"gps", "aircraft"}},
      {"r24", "The camera shall capture the landing of the uav.", {"camera", "landing", "uav"}},
      {"r25", "The sensor shall alert the operator about obstacles.",
       {"sensor", "operator", "obstacles"}},
      {"r26", "The mission shall end when the uav reaches the ground.", {"mission", "ground"}},
      {"r27", "The vehicle shall carry the power unit and the camera.",
       {"vehicle", "power unit", "camera"}},
      {"r28", "The location of the uav shall appear on the simulator.",
       {"location", "simulator"}},
      {"r29", "The aircraft shall descend to the landing zone slowly.",
       {"aircraft", "landing zone"}},
      {"r30", "The terrain map shall cover every waypoint of the mission.",
       {"terrain map", "waypoint", "mission"}},
      {"r31", "The uav shall hover above the waypoint until commanded.", {"uav", "waypoint"}},
      {"r32", "The operator shall review the video from the camera.", {"operator", "video"}},
      {"r33", "The battery level shall appear on the ground station.",
       {"battery level", "ground station"}},
      {"r34", "The quadcopter shall avoid the obstacles near the terrain.",
       {"quadcopter", "obstacles"}},
      {"r35", "The simulator shall replay the mission of the aircraft.",
       {"simulator", "mission", "aircraft"}},
      {"r36", "The gps shall store the location of every landing.", {"gps", "location"}},
      {"r37", "The sensor shall measure the altitude during the landing.",
       {"sensor", "altitude", "landing"}},
      {"r38", "The ground shall be scanned by the camera before the landing.",
       {"ground", "camera"}},
      {"r39", "The power unit shall supply the altimeter and the gps.",
       {"power unit", "altimeter", "gps"}},
      {"r40", "The waypoint list shall be saved by the ground station.",
       {"waypoint list", "ground station"}},
      {"r41", "The internal simulator shall estimate the battery usage.",
       {"internal simulator", "battery usage"}},
      {"r42", "The operator shall approve the mission before the flight.",
       {"operator", "mission", "flight"}},
      {"r43", "The uav shall stream the altitude to the internal simulator.",
       {"uav", "internal simulator"}},
      {"r44", "The vehicle shall park near the ground station at night.",
       {"vehicle", "ground station"}},
      {"r45", "The camera shall focus on the terrain during the flight.",
       {"camera", "flight"}},
      {"r46", "The altimeter shall calibrate before every mission.", {"altimeter", "mission"}},
      {"r47", "The quadcopter shall deliver the sensor to the waypoint.",
       {"quadcopter", "sensor", "waypoint"}},
      {"r48", "The landing gear shall deploy above the ground.", {"landing gear", "ground"}},
      {"r49", "The simulator shall warn the operator about the battery.",
       {"simulator", "operator", "battery"}},
      {"r50", "The flight shall end with a landing at the ground station.",
       {"flight", "landing", "ground station"}},
  };

  std::vector<RequirementRecord> out;
  const int n = std::min<int>(count, static_cast<int>(rows.size()));
  for (int i = 0; i < n; ++i) {
    RequirementRecord rec;
    rec.id = rows[static_cast<std::size_t>(i)].id;
    rec.text = rows[static_cast<std::size_t>(i)].text;
    for (const char* kw : rows[static_cast<std::size_t>(i)].keywords)
      rec.keywords.push_back(tokenize(kw));
    if (i % 3 == 0) {
      SyntaxReference ref;
      const Tokens toks = tokenize(rec.text);
      // subject = first keyword, action = verb-ish middle, object = rest
      SyntaxElement subject{"subject", {rec.keywords[0].begin(), rec.keywords[0].end()}, 0.5};
      SyntaxElement object{"object",
                           {rec.keywords.back().begin(), rec.keywords.back().end()},
                           0.3};
      SyntaxElement action{"action", {toks.size() > 3 ? toks[3] : toks.back()}, 0.2};
      ref.elements = {action, object, subject};
      std::sort(ref.elements.begin(), ref.elements.end(),
                [](const SyntaxElement& a, const SyntaxElement& b) { return a.name < b.name; });
      ref.validate();
      rec.roles = ref;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_toy_corpus(const std::string& path, const std::vector<RequirementRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& rec : records) {
    nlohmann::json line{{"id", rec.id}, {"text", rec.text}};
    nlohmann::json kws = nlohmann::json::array();
    for (const auto& p : rec.keywords) kws.push_back(phrase_text(p));
    line["keywords"] = std::move(kws);
    if (rec.roles) {
      nlohmann::json roles = nlohmann::json::object();
      for (const auto& e : rec.roles->elements) {
        nlohmann::json words = nlohmann::json::array();
        for (const auto& w : e.words) words.push_back(w);
        roles[e.name] = {{"words", std::move(words)}, {"alpha", e.alpha}};
      }
      line["roles"] = std::move(roles);
    }
    out << line.dump() << '\n';
  }
}

OntologyGraph random_graph(Rng& rng, int max_nodes) {
  const int n = 2 + static_cast<int>(rng.next_index(static_cast<std::size_t>(max_nodes - 1)));
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
  const std::vector<std::string> relations = {"subClassOf", "hasDomain", "hasRange", "linksTo",
                                              "controls"};
  OntologyGraph graph;
  const int edges = n + static_cast<int>(rng.next_index(static_cast<std::size_t>(n) + 1));
  std::set<std::array<std::string, 3>> seen;
  for (int e = 0; e < edges; ++e) {
    const auto& a = names[rng.next_index(names.size())];
    const auto& b = names[rng.next_index(names.size())];
    if (a == b) continue;
    const auto& r = relations[rng.next_index(relations.size())];
    if (!seen.insert({a, r, b}).second) continue;
    graph.add_triple({a, r, b});
  }
  if (graph.triples.empty()) graph.add_triple({names[0], "linksTo", names[1]});
  return graph;
}

std::string scratch_dir(const std::string& tag) {
  static std::uint64_t counter = 0;
  const auto base = std::filesystem::temp_directory_path() / "reqgen_tests";
  const auto dir = base / (tag + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace reqgen::test
