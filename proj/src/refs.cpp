#include "metaemb/refs.hpp"

#include <fstream>

#include "metaemb/errors.hpp"
#include "metaemb/util.hpp"

namespace metaemb {

namespace {

std::string compose_key(const std::string& method, const std::string& loss,
                        const std::string& target, const std::string& dataset) {
  return method + '\x1f' + loss + '\x1f' + target + '\x1f' + dataset;
}

}  // namespace

ReferenceSet ReferenceSet::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reference file: " + path);

  ReferenceSet refs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);

    std::string method, loss, target, dataset;
    std::optional<double> value;
    for (std::string_view tok : split_ws(body)) {
      const std::size_t eq = tok.find('=');
      if (eq == std::string_view::npos)
        throw DataError(where + ": expected key=value, got '" +
                        std::string(tok) + "'");
      const std::string_view key = tok.substr(0, eq);
      const std::string_view val = tok.substr(eq + 1);
      if (key == "method") method = std::string(val);
      else if (key == "loss") loss = std::string(val);
      else if (key == "target") target = std::string(val);
      else if (key == "dataset") dataset = std::string(val);
      else if (key == "value") value = parse_double(val, where);
      else if (key == "provenance") continue;
      else throw DataError(where + ": unknown key '" + std::string(key) + "'");
    }
    if (method.empty() || dataset.empty() || !value)
      throw DataError(where + ": record needs method, dataset, and value");
    const std::string key = compose_key(method, loss, target, dataset);
    if (!refs.map_.emplace(key, *value).second)
      throw DataError(where + ": duplicate reference record");
  }
  return refs;
}

std::optional<double> ReferenceSet::lookup(const std::string& method,
                                           const std::string& loss,
                                           const std::string& target,
                                           const std::string& dataset) const {
  auto it = map_.find(compose_key(method, loss, target, dataset));
  if (it == map_.end() && !loss.empty())
    it = map_.find(compose_key(method, "", target, dataset));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

}  // namespace metaemb
