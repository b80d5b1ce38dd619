#include <sstream>

#include "edukg/common/error.h"
#include "edukg/graph/graph.h"
#include "json.hpp"

namespace edukg::graph {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json NodeJson(const Node& n) {
  ordered_json j;
  j["t"] = "node";
  j["type"] = NodeTypeName(n.type);
  j["id"] = n.id;
  switch (n.type) {
    case NodeType::kLearningMaterial:
      j["material_id"] = n.material_id;
      j["name"] = n.label;
      break;
    case NodeType::kSlide:
      j["material_id"] = n.material_id;
      j["slide_no"] = n.slide_no;
      j["text_hash"] = n.text_hash;
      break;
    case NodeType::kConcept:
      j["page_id"] = n.page_id;
      j["title"] = n.label;
      j["kind"] = ConceptKindName(n.kind);
      break;
    case NodeType::kCategory:
      j["name"] = n.label;
      break;
  }
  return j;
}

ordered_json EdgeJson(const Edge& e) {
  ordered_json j;
  j["t"] = "edge";
  j["type"] = EdgeTypeName(e.type);
  j["from"] = e.from;
  j["to"] = e.to;
  j["w"] = e.weight;
  return j;
}

std::string XmlEscape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Data(std::string_view key, std::string_view value) {
  return "<data key=\"" + std::string(key) + "\">" + XmlEscape(value) + "</data>";
}

std::string ExportGraphml(const EduKG& kg) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      << "  <key id=\"type\" for=\"node\" attr.name=\"type\" attr.type=\"string\"/>\n"
      << "  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
      << "  <key id=\"kind\" for=\"node\" attr.name=\"kind\" attr.type=\"string\"/>\n"
      << "  <key id=\"page_id\" for=\"node\" attr.name=\"page_id\" attr.type=\"long\"/>\n"
      << "  <key id=\"slide_no\" for=\"node\" attr.name=\"slide_no\" attr.type=\"int\"/>\n"
      << "  <key id=\"text_hash\" for=\"node\" attr.name=\"text_hash\" attr.type=\"string\"/>\n"
      << "  <key id=\"etype\" for=\"edge\" attr.name=\"type\" attr.type=\"string\"/>\n"
      << "  <key id=\"w\" for=\"edge\" attr.name=\"w\" attr.type=\"double\"/>\n"
      << "  <graph id=\"" << XmlEscape(MaterialNodeId(kg.material_id())) << "\" edgedefault=\"directed\">\n";
  for (const auto& n : kg.Nodes()) {
    out << "    <node id=\"" << XmlEscape(n.id) << "\">" << Data("type", NodeTypeName(n.type));
    switch (n.type) {
      case NodeType::kLearningMaterial:
      case NodeType::kCategory:
        out << Data("label", n.label);
        break;
      case NodeType::kSlide:
        out << Data("slide_no", std::to_string(n.slide_no)) << Data("text_hash", n.text_hash);
        break;
      case NodeType::kConcept:
        out << Data("label", n.label) << Data("kind", ConceptKindName(n.kind))
            << Data("page_id", std::to_string(n.page_id));
        break;
    }
    out << "</node>\n";
  }
  size_t i = 0;
  for (const auto& e : kg.Edges()) {
    out << "    <edge id=\"e" << i++ << "\" source=\"" << XmlEscape(e.from) << "\" target=\""
        << XmlEscape(e.to) << "\">" << Data("etype", EdgeTypeName(e.type))
        << Data("w", ordered_json(e.weight).dump()) << "</edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

}  // namespace

ExportFormat ParseExportFormat(std::string_view s) {
  if (s == "jsonl") return ExportFormat::kJsonl;
  if (s == "graphml") return ExportFormat::kGraphml;
  throw ConfigError("unknown export format: " + std::string(s));
}

std::string Export(const EduKG& kg, ExportFormat format) {
  if (format == ExportFormat::kGraphml) return ExportGraphml(kg);
  std::string out;
  for (const auto& n : kg.Nodes()) out += NodeJson(n).dump() + "\n";
  for (const auto& e : kg.Edges()) out += EdgeJson(e).dump() + "\n";
  return out;
}

EduKG ParseJsonl(std::string_view jsonl) {
  EduKG kg;
  std::vector<Edge> edges;
  long long line_no = 0;
  size_t pos = 0;
  while (pos < jsonl.size()) {
    size_t nl = jsonl.find('\n', pos);
    std::string_view line = jsonl.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? jsonl.size() : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const std::string t = j.at("t").get<std::string>();
      if (t == "node") {
        Node n;
        n.type = ParseNodeType(j.at("type").get<std::string>());
        n.id = j.at("id").get<std::string>();
        switch (n.type) {
          case NodeType::kLearningMaterial:
            n.material_id = j.at("material_id").get<std::string>();
            n.label = j.at("name").get<std::string>();
            break;
          case NodeType::kSlide:
            n.material_id = j.at("material_id").get<std::string>();
            n.slide_no = j.at("slide_no").get<int>();
            n.text_hash = j.at("text_hash").get<std::string>();
            break;
          case NodeType::kConcept:
            n.page_id = j.at("page_id").get<kb::PageId>();
            n.label = j.at("title").get<std::string>();
            n.kind = ParseConceptKind(j.at("kind").get<std::string>());
            break;
          case NodeType::kCategory:
            n.label = j.at("name").get<std::string>();
            break;
        }
        if (kg.FindNode(n.id)) throw ParseError("duplicate node " + n.id, line_no);
        kg.AddNode(n);
      } else if (t == "edge") {
        edges.push_back({ParseEdgeType(j.at("type").get<std::string>()), j.at("from").get<std::string>(),
                         j.at("to").get<std::string>(), j.at("w").get<double>()});
      } else {
        throw ParseError("unknown record kind " + t, line_no);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad graph record: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      if (e.position() >= 0) throw;
      throw ParseError(e.what(), line_no);
    }
  }
  for (const auto& e : edges) kg.AddEdge(e);
  return kg;
}

}  // namespace edukg::graph
