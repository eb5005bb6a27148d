#include "metaemb/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "metaemb/errors.hpp"
#include "metaemb/util.hpp"

namespace metaemb {

MetaOptions RunConfig::meta_options() const {
  MetaOptions opts;
  opts.hidden = hidden;
  opts.dropout = dropout;
  opts.svd_rank = svd_rank;
  opts.train = train;
  opts.train.shuffle_seed = seed;
  return opts;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

namespace {

enum class Section { Global, Source, Method, Dataset };

struct ParseCtx {
  std::string origin;
  std::size_t line_no = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(origin + ":" + std::to_string(line_no) + ": " + msg);
  }
};

bool parse_bool(std::string_view v, const ParseCtx& ctx) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  ctx.fail("expected true/false, got '" + std::string(v) + "'");
}

TableFormat parse_format(std::string_view v, const ParseCtx& ctx) {
  if (v == "plain") return TableFormat::Plain;
  if (v == "headered") return TableFormat::Headered;
  ctx.fail("expected plain/headered, got '" + std::string(v) + "'");
}

PairSeparator parse_sep(std::string_view v, const ParseCtx& ctx) {
  if (v == "tab") return PairSeparator::Tab;
  if (v == "comma") return PairSeparator::Comma;
  ctx.fail("expected tab/comma, got '" + std::string(v) + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  Section section = Section::Global;
  ParseCtx ctx{origin, 0};

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++ctx.line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("unterminated section header");
      std::string_view name = trim(line.substr(1, line.size() - 2));
      if (name == "source") {
        section = Section::Source;
        cfg.sources.emplace_back();
      } else if (name == "method") {
        section = Section::Method;
        cfg.methods.emplace_back();
      } else if (name == "dataset") {
        section = Section::Dataset;
        cfg.datasets.emplace_back();
      } else {
        ctx.fail("unknown section '" + std::string(name) + "'");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) ctx.fail("expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) ctx.fail("empty key");
    const std::string where = ctx.origin + ":" + std::to_string(ctx.line_no);

    switch (section) {
      case Section::Global:
        if (key == "hidden") {
          cfg.hidden = parse_size(value, where);
        } else if (key == "dropout") {
          cfg.dropout = parse_double(value, where);
          if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
            ctx.fail("dropout must be in [0, 1)");
        } else if (key == "rank") {
          cfg.svd_rank = parse_size(value, where);
        } else if (key == "batch") {
          cfg.train.batch_size = parse_size(value, where);
        } else if (key == "epochs") {
          cfg.train.epochs = parse_size(value, where);
        } else if (key == "lr") {
          cfg.train.learning_rate = parse_double(value, where);
          if (cfg.train.learning_rate < 0.0)
            ctx.fail("lr must be non-negative");
        } else if (key == "init_std") {
          cfg.train.init_std = parse_double(value, where);
        } else if (key == "init_scaled") {
          cfg.train.init_scaled = parse_bool(value, ctx);
        } else if (key == "seed") {
          cfg.seed = parse_size(value, where);
        } else if (key == "out") {
          cfg.out_dir = value;
        } else if (key == "refs") {
          cfg.refs_path = value;
        } else {
          ctx.fail("unknown key '" + key + "'");
        }
        break;
      case Section::Source: {
        auto& src = cfg.sources.back();
        if (key == "name") src.name = value;
        else if (key == "path") src.path = value;
        else if (key == "format") src.format = parse_format(value, ctx);
        else ctx.fail("unknown [source] key '" + key + "'");
        break;
      }
      case Section::Method: {
        auto& m = cfg.methods.back();
        if (key == "name") m.method = parse_method(value);
        else if (key == "loss") m.loss = parse_loss(value);
        else if (key == "target") m.target = parse_size(value, where);
        else if (key == "rank") m.rank = parse_size(value, where);
        else ctx.fail("unknown [method] key '" + key + "'");
        break;
      }
      case Section::Dataset: {
        auto& ds = cfg.datasets.back();
        if (key == "name") ds.name = value;
        else if (key == "path") ds.path = value;
        else if (key == "sep") ds.sep = parse_sep(value, ctx);
        else ctx.fail("unknown [dataset] key '" + key + "'");
        break;
      }
    }
  }

  for (auto& src : cfg.sources) {
    if (src.path.empty()) throw DataError(origin + ": [source] block without a path");
    if (src.name.empty()) src.name = stem_of(src.path);
  }
  for (auto& ds : cfg.datasets) {
    if (ds.path.empty()) throw DataError(origin + ": [dataset] block without a path");
    if (ds.name.empty()) ds.name = stem_of(ds.path);
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace metaemb
