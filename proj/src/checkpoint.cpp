#include "marl/checkpoint.h"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "marl/rng.h"

namespace marl {
namespace checkpoint {

using nlohmann::json;

void save(const std::string& path, const std::map<std::string, const ParamStore*>& stores,
          std::uint64_t config_hash, const std::string& rng_state) {
  json payload = json::object();
  for (const auto& [store_name, store] : stores) {
    json sj = json::object();
    for (const auto& [name, p] : store->entries()) {
      sj[name] = {{"shape", p.value.shape}, {"data", p.value.data}};
    }
    payload[store_name] = std::move(sj);
  }
  std::string body = payload.dump();
  json doc = {
      {"version", kVersion},
      {"config_hash", config_hash},
      {"rng_state", rng_state},
      {"params", std::move(payload)},
      {"checksum", fnv1a_str(body)},
  };
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
  out << doc.dump() << "\n";
}

Loaded load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: corrupt file '" + path + "': " + e.what());
  }
  if (!doc.contains("version") || doc["version"].get<int>() != kVersion)
    throw std::runtime_error("checkpoint: version mismatch in '" + path + "'");
  std::string body = doc["params"].dump();
  if (fnv1a_str(body) != doc["checksum"].get<std::uint64_t>())
    throw std::runtime_error("checkpoint: checksum mismatch in '" + path + "'");
  Loaded out;
  out.config_hash = doc["config_hash"].get<std::uint64_t>();
  out.rng_state = doc.value("rng_state", "");
  for (const auto& [store_name, sj] : doc["params"].items()) {
    ParamStore store;
    for (const auto& [name, pj] : sj.items()) {
      std::vector<int> shape = pj["shape"].get<std::vector<int>>();
      std::vector<double> data = pj["data"].get<std::vector<double>>();
      ParamStore::Param& p = store.ensure(name, shape, Init::Zeros);
      if (p.value.size() != data.size())
        throw std::runtime_error("checkpoint: shape/data mismatch for '" + name + "'");
      p.value.data = std::move(data);
    }
    out.stores.emplace(store_name, std::move(store));
  }
  return out;
}

void save_single(const std::string& path, const ParamStore& store, std::uint64_t config_hash) {
  save(path, {{"policy", &store}}, config_hash);
}

ParamStore load_single(const std::string& path, std::uint64_t expect_hash) {
  Loaded l = load(path);
  if (expect_hash != 0 && l.config_hash != expect_hash)
    throw std::runtime_error("checkpoint: config hash mismatch for '" + path + "'");
  auto it = l.stores.find("policy");
  if (it == l.stores.end()) throw std::runtime_error("checkpoint: missing 'policy' store");
  return std::move(it->second);
}

}  // namespace checkpoint
}  // namespace marl
