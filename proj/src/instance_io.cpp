#include "rfsc/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rfsc {

using nlohmann::json;

namespace {

OpRef parse_op_ref(const json& j) {
  if (j.is_array() && j.size() == 2 && j[0].is_number_unsigned() && j[1].is_number_unsigned())
    return {j[0].get<ThreadId>(), j[1].get<std::uint32_t>()};
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    auto dot = s.find('.');
    if (dot != std::string::npos && dot > 0 && dot + 1 < s.size() && s.find('.', dot + 1) == std::string::npos) {
      try {
        std::size_t p1 = 0, p2 = 0;
        auto t = std::stoul(s.substr(0, dot), &p1);
        auto i = std::stoul(s.substr(dot + 1), &p2);
        if (p1 == dot && p2 == s.size() - dot - 1) return {static_cast<ThreadId>(t), static_cast<std::uint32_t>(i)};
      } catch (const std::exception&) {
      }
    }
  }
  throw MalformedInstance("bad op id " + j.dump());
}

std::string op_ref_string(const OpRef& r) { return std::to_string(r.thread) + "." + std::to_string(r.index); }

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Read: return "read";
    case OpKind::Write: return "write";
    case OpKind::Fence: return "fence";
    case OpKind::LockAcquire: return "lock_acq";
    case OpKind::LockRelease: return "lock_rel";
    case OpKind::Join: return "join";
  }
  return "?";
}

}  // namespace

InstanceSpec parse_instance_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedInstance(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedInstance("instance must be a JSON object");
  InstanceSpec spec;
  try {
    if (doc.contains("model")) spec.model = parse_memory_model(doc.at("model").get<std::string>());
    if (doc.contains("vars"))
      for (const auto& v : doc.at("vars")) spec.var_id(v.get<std::string>());
    if (!doc.contains("threads") || !doc.at("threads").is_array()) throw MalformedInstance("missing \"threads\" array");
    for (const auto& th : doc.at("threads")) {
      if (!th.is_array()) throw MalformedInstance("each thread must be an array of ops");
      std::vector<ThreadOp> ops;
      for (const auto& o : th) {
        if (!o.is_object()) throw MalformedInstance("op must be an object: " + o.dump());
        ThreadOp op;
        const std::string kind = o.at("kind").get<std::string>();
        if (kind == "read") op.kind = OpKind::Read;
        else if (kind == "write") op.kind = OpKind::Write;
        else if (kind == "fence") op.kind = OpKind::Fence;
        else if (kind == "lock_acq") op.kind = OpKind::LockAcquire;
        else if (kind == "lock_rel") op.kind = OpKind::LockRelease;
        else if (kind == "join") op.kind = OpKind::Join;
        else throw MalformedInstance("unknown op kind \"" + kind + "\"");
        const bool needs_var = op.kind != OpKind::Fence && op.kind != OpKind::Join;
        if (needs_var) {
          if (!o.contains("var")) throw MalformedInstance(kind + " op needs \"var\"");
          op.var = spec.var_id(o.at("var").get<std::string>());
        } else if (o.contains("var")) {
          throw MalformedInstance(kind + " op carries no variable");
        }
        if (op.kind == OpKind::Join) op.join_target = o.at("thread").get<ThreadId>();
        if (o.contains("block")) {
          auto b = o.at("block").get<std::int64_t>();
          if (b < 0 || b > 1'000'000) throw MalformedInstance("block id out of range");
          op.block = static_cast<std::int32_t>(b);
        }
        ops.push_back(op);
      }
      spec.threads.push_back(std::move(ops));
    }
    if (doc.contains("rf")) {
      for (const auto& e : doc.at("rf")) {
        if (!e.is_array() || e.size() != 2) throw MalformedInstance("rf entry must be [read, write]: " + e.dump());
        RfEntry entry;
        entry.read = parse_op_ref(e[0]);
        if (!(e[1].is_string() && e[1].get<std::string>() == "init")) entry.write = parse_op_ref(e[1]);
        spec.rf.push_back(entry);
      }
    }
  } catch (const json::exception& e) {
    throw MalformedInstance(std::string("bad instance field: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedInstance(e.what());
  }
  return spec;
}

InstanceSpec load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInstance("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance_json(ss.str());
}

std::string instance_to_json(const InstanceSpec& spec) {
  json doc;
  doc["model"] = to_string(spec.model);
  doc["vars"] = spec.var_names;
  doc["threads"] = json::array();
  for (const auto& ops : spec.threads) {
    json th = json::array();
    for (const auto& op : ops) {
      json o;
      o["kind"] = op_kind_name(op.kind);
      if (op.var != kNoVar) o["var"] = spec.var_names[static_cast<std::size_t>(op.var)];
      if (op.kind == OpKind::Join) o["thread"] = op.join_target;
      if (op.block != kNoBlock) o["block"] = op.block;
      th.push_back(o);
    }
    doc["threads"].push_back(th);
  }
  doc["rf"] = json::array();
  for (const auto& e : spec.rf)
    doc["rf"].push_back(json::array({op_ref_string(e.read), e.write ? op_ref_string(*e.write) : std::string("init")}));
  return doc.dump(1);
}

std::string witness_to_json(const Instance& inst, const std::vector<EventId>& order) {
  json arr = json::array();
  for (EventId e : order) arr.push_back(inst.string_id(e));
  return arr.dump();
}

}  // namespace rfsc
