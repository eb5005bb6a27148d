#include "metaemb/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "metaemb/errors.hpp"
#include "metaemb/eval.hpp"
#include "metaemb/refs.hpp"
#include "metaemb/report.hpp"
#include "metaemb/util.hpp"

namespace fs = std::filesystem;

namespace metaemb {

namespace {

void require_out(const RunConfig& cfg) {
  if (cfg.out_dir.empty())
    throw DataError("an output directory is required (--out or out= in the config)");
}

fs::path norm_path(const std::string& p) {
  std::error_code ec;
  fs::path abs = fs::absolute(p, ec);
  return (ec ? fs::path(p) : abs).lexically_normal();
}

void require_paths_distinct(const RunConfig& cfg) {
  const fs::path out = norm_path(cfg.out_dir);
  auto check = [&](const std::string& p, const char* what) {
    if (!p.empty() && norm_path(p) == out)
      throw DataError(std::string(what) + " path '" + p +
                      "' equals the output directory");
  };
  for (const auto& s : cfg.sources) check(s.path, "source");
  for (const auto& d : cfg.datasets) check(d.path, "dataset");
  check(cfg.refs_path, "reference");
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

AlignedEmbeddingSet do_align(const RunConfig& cfg, std::ostream& log) {
  if (cfg.sources.size() < 2)
    throw DataError("align needs at least 2 sources (got " +
                    std::to_string(cfg.sources.size()) + ")");
  std::unordered_set<std::string> names;
  for (const auto& s : cfg.sources)
    if (!names.insert(s.name).second)
      throw DataError("duplicate source name '" + s.name + "'");

  std::vector<std::string> missing;
  for (const auto& s : cfg.sources)
    if (!fs::exists(s.path)) missing.push_back(s.path);
  if (!missing.empty()) {
    std::string msg =
        "missing source embedding files (pretrained vectors must be supplied):";
    for (const auto& p : missing) msg += "\n  " + p;
    throw DataError(msg);
  }

  std::vector<EmbeddingTable> tables;
  tables.reserve(cfg.sources.size());
  for (const auto& s : cfg.sources) {
    tables.push_back(load_table(s.path, s.format, nullptr, s.name));
    log << "loaded " << s.name << ": " << tables.back().size()
        << " words, dim " << tables.back().dim << '\n';
  }

  NormalizeStats nstats;
  AlignedEmbeddingSet set = l2_normalize(align(tables), &nstats);
  log << "aligned vocabulary: " << set.vocab_size() << " words";
  if (nstats.zero_rows_dropped)
    log << " (dropped " << nstats.zero_rows_dropped << " zero rows)";
  log << '\n';
  return set;
}

void write_aligned_artifact(const AlignedEmbeddingSet& set,
                            const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "aligned");
  std::ostringstream manifest;
  manifest << "vocab=" << set.vocab_size() << '\n';
  manifest << "normalized=1\n";
  manifest << "sources=" << set.source_count() << '\n';
  for (std::size_t s = 0; s < set.source_count(); ++s) {
    const std::string rel = "aligned/" + set.sources[s].name + ".vec";
    export_table(set.source_table(s), (fs::path(out_dir) / rel).string());
    manifest << "source." << s << ".name=" << set.sources[s].name << '\n';
    manifest << "source." << s << ".dim=" << set.sources[s].dim << '\n';
    manifest << "source." << s << ".file=" << rel << '\n';
  }
  write_text_file(fs::path(out_dir) / "manifest.kv", manifest.str());
}

AlignedEmbeddingSet obtain_aligned(const RunConfig& cfg, std::ostream& log) {
  if (fs::exists(fs::path(cfg.out_dir) / "manifest.kv"))
    return load_aligned_artifact(cfg.out_dir);
  if (cfg.sources.size() >= 2) {
    AlignedEmbeddingSet set = do_align(cfg, log);
    fs::create_directories(cfg.out_dir);
    write_aligned_artifact(set, cfg.out_dir);
    // Continue from the artifact so later commands see identical bits.
    return load_aligned_artifact(cfg.out_dir);
  }
  throw DataError("no aligned artifact at " +
                  (fs::path(cfg.out_dir) / "manifest.kv").string() +
                  "; run align or pass --sources");
}

std::string combo_label(const MethodSpec& spec, const AlignedEmbeddingSet& set) {
  std::string label = to_string(spec.method);
  if (method_uses_loss(spec.method))
    label += std::string("-") + to_string(spec.loss);
  if (method_uses_target(spec.method)) {
    label += '-';
    label += spec.target < set.source_count() ? set.sources[spec.target].name
                                              : "t" + std::to_string(spec.target);
  }
  return label;
}

MetaModel build_model(const MethodSpec& spec, const AlignedEmbeddingSet& set,
                      const RunConfig& cfg) {
  MetaOptions opts = cfg.meta_options();
  if (spec.rank) opts.svd_rank = spec.rank;
  switch (spec.method) {
    case MetaMethod::Conc:
    case MetaMethod::Avg:
    case MetaMethod::Svd:
      return baseline_model(spec.method, set, opts.svd_rank);
    case MetaMethod::OneTon:
      return one_ton(set, opts);
    case MetaMethod::Caeme:
    case MetaMethod::Daeme:
    case MetaMethod::Aaeme:
      return train_ae(spec.method, set, spec.loss, opts);
    case MetaMethod::Tae:
      return train_tae(set, spec.target, spec.loss, opts, false);
    case MetaMethod::TaePlusY:
      return train_tae(set, spec.target, spec.loss, opts, true);
    case MetaMethod::Mte:
      return train_mte(set, spec.target, spec.loss, opts);
  }
  throw ContractError("unhandled method");
}

void save_combo_artifacts(const MetaModel& model, const EmbeddingTable& table,
                          const std::string& label, const std::string& out_dir) {
  fs::create_directories(fs::path(out_dir) / "tables");
  export_table(table, (fs::path(out_dir) / "tables" / (label + ".vec")).string());

  fs::create_directories(fs::path(out_dir) / "models");
  const fs::path model_path = fs::path(out_dir) / "models" / (label + ".model");
  std::ofstream mout(model_path);
  if (!mout) throw DataError("cannot write " + model_path.string());
  save_model(model, mout);
  mout.flush();
  if (!mout) throw DataError("write failed: " + model_path.string());

  if (!model.trace.empty()) {
    fs::create_directories(fs::path(out_dir) / "traces");
    std::ostringstream tr;
    for (std::size_t e = 0; e < model.trace.size(); ++e)
      tr << e << ' ' << format_double(model.trace[e]) << '\n';
    write_text_file(fs::path(out_dir) / "traces" / (label + ".trace"), tr.str());
  }
}

std::vector<SimilarityDataset> load_datasets(const RunConfig& cfg) {
  if (cfg.datasets.empty())
    throw DataError("no datasets requested (--datasets or [dataset] blocks)");
  std::vector<SimilarityDataset> out;
  out.reserve(cfg.datasets.size());
  for (const auto& spec : cfg.datasets)
    out.push_back(load_dataset(spec.path, spec.name, spec.sep));
  return out;
}

const char* error_category(const Error& e) {
  if (dynamic_cast<const DataError*>(&e)) return "coverage";
  if (dynamic_cast<const NumericError*>(&e)) return "numeric";
  return "error";
}

GridRow make_row(const std::string& label, const std::string& method,
                 const std::string& loss, const std::string& target,
                 const EmbeddingTable& table,
                 const std::vector<SimilarityDataset>& datasets,
                 const ReferenceSet& refs, bool* any_cell_failed) {
  GridRow row{label, method, loss, target, {}};
  for (const auto& ds : datasets) {
    GridCell cell;
    try {
      EvalResult r = evaluate(table, ds);
      cell.ok = true;
      cell.rho_scaled = r.rho_scaled;
      cell.pairs_scored = r.pairs_scored;
      cell.pairs_total = r.pairs_total;
      cell.reference = refs.lookup(method, loss, target, ds.name);
    } catch (const Error& e) {
      cell.ok = false;
      cell.error = error_category(e);
      if (any_cell_failed) *any_cell_failed = true;
    }
    row.cells.push_back(std::move(cell));
  }
  return row;
}

GridRow failed_row(const std::string& label, const std::string& method,
                   const std::string& loss, const std::string& target,
                   std::size_t n_datasets) {
  GridRow row{label, method, loss, target, {}};
  GridCell cell;
  cell.ok = false;
  cell.error = "train";
  row.cells.assign(n_datasets, cell);
  return row;
}

// Runs independent grid cells on a bounded worker pool. Jobs must not throw;
// results come back in submission order so the (single-threaded) collector
// can write artifacts and reports deterministically.
template <typename Result>
std::vector<Result> run_cells(std::vector<std::function<Result()>>& jobs) {
  std::vector<Result> results(jobs.size());
  if (jobs.empty()) return results;
  const std::size_t n_threads = std::max<std::size_t>(
      1, std::min<std::size_t>(jobs.size(), std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
        results[i] = jobs[i]();
    });
  for (auto& worker : pool) worker.join();
  return results;
}

ReferenceSet load_refs(const RunConfig& cfg, std::ostream& log) {
  std::string path = cfg.refs_path;
  if (path.empty())
    if (const char* env = std::getenv("METAEMB_REFS")) path = env;
  if (path.empty() && fs::exists("data/table1_reference.kv"))
    path = "data/table1_reference.kv";
  if (path.empty()) {
    log << "note: no reference score file found; deltas omitted\n";
    return {};
  }
  ReferenceSet refs = ReferenceSet::load_file(path);
  log << "loaded " << refs.size() << " reference scores from " << path << '\n';
  return refs;
}

}  // namespace

AlignedEmbeddingSet load_aligned_artifact(const std::string& out_dir) {
  const fs::path manifest_path = fs::path(out_dir) / "manifest.kv";
  std::ifstream in(manifest_path);
  if (!in)
    throw DataError("no aligned artifact at " + manifest_path.string() +
                    " (run align first)");

  std::unordered_map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos)
      throw DataError(manifest_path.string() + ": malformed line '" + line + "'");
    kv[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw DataError(manifest_path.string() + ": missing key '" + key + "'");
    return it->second;
  };

  const std::size_t vocab = parse_size(get("vocab"), manifest_path.string());
  const std::size_t ns = parse_size(get("sources"), manifest_path.string());
  if (ns == 0) throw DataError(manifest_path.string() + ": no sources listed");

  AlignedEmbeddingSet set;
  for (std::size_t s = 0; s < ns; ++s) {
    const std::string prefix = "source." + std::to_string(s) + ".";
    const std::string& name = get(prefix + "name");
    const std::string& file = get(prefix + "file");
    const std::size_t dim = parse_size(get(prefix + "dim"), manifest_path.string());
    EmbeddingTable t = load_table((fs::path(out_dir) / file).string(),
                                  TableFormat::Headered, nullptr, name);
    if (t.dim != dim)
      throw DataError(manifest_path.string() + ": dim mismatch for " + name);
    if (s == 0) {
      set.shared_vocab = t.vocab;
      set.index = t.index;
    } else if (t.vocab != set.shared_vocab) {
      throw DataError("aligned artifact corrupt: vocabulary mismatch in " + file);
    }
    set.sources.push_back({name, t.dim, std::move(t.matrix)});
  }
  if (set.vocab_size() != vocab)
    throw DataError(manifest_path.string() + ": vocab size mismatch");
  set.normalized = true;
  return set;
}

int run_align(const RunConfig& cfg, std::ostream& log) {
  require_out(cfg);
  require_paths_distinct(cfg);
  AlignedEmbeddingSet set = do_align(cfg, log);
  fs::create_directories(cfg.out_dir);
  write_aligned_artifact(set, cfg.out_dir);
  log << "wrote " << (fs::path(cfg.out_dir) / "manifest.kv").string() << '\n';
  return kExitOk;
}

int run_train(const RunConfig& cfg, std::ostream& log) {
  require_out(cfg);
  require_paths_distinct(cfg);
  if (cfg.methods.empty())
    throw DataError("no methods requested (--methods or [method] blocks)");

  AlignedEmbeddingSet set = obtain_aligned(cfg, log);

  struct TrainCell {
    std::string label;
    bool ok = false;
    std::string error;
    MetaModel model;
    EmbeddingTable table;
  };
  std::vector<std::function<TrainCell()>> jobs;
  for (const auto& spec : cfg.methods)
    jobs.push_back([spec, &set, &cfg] {
      TrainCell cell;
      cell.label = combo_label(spec, set);
      try {
        cell.model = build_model(spec, set, cfg);
        cell.table = build_meta_table(cell.model, set, cell.label);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      return cell;
    });

  std::vector<std::string> failures;
  for (TrainCell& cell : run_cells(jobs)) {
    if (cell.ok) {
      save_combo_artifacts(cell.model, cell.table, cell.label, cfg.out_dir);
      log << cell.label << ": meta table " << cell.table.size() << " x "
          << cell.table.dim;
      if (!cell.model.trace.empty())
        log << ", final epoch loss " << format_double(cell.model.trace.back());
      log << '\n';
    } else {
      failures.push_back(cell.label + ": " + cell.error);
      log << cell.label << ": FAILED (" << cell.error << ")\n";
    }
  }
  if (!failures.empty()) {
    log << failures.size() << " of " << cfg.methods.size()
        << " combinations failed\n";
    return kExitPartial;
  }
  return kExitOk;
}

int run_eval(const RunConfig& cfg, std::ostream& log) {
  require_out(cfg);
  require_paths_distinct(cfg);
  const std::vector<SimilarityDataset> datasets = load_datasets(cfg);

  const fs::path tdir = fs::path(cfg.out_dir) / "tables";
  std::vector<fs::path> files;
  if (fs::exists(tdir))
    for (const auto& entry : fs::directory_iterator(tdir))
      if (entry.path().extension() == ".vec") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw DataError("no meta tables under " + tdir.string() + "; run train first");

  Grid grid;
  for (const auto& ds : datasets) grid.datasets.push_back(ds.name);
  bool any_cell_failed = false;
  const ReferenceSet no_refs;
  for (const auto& file : files) {
    EmbeddingTable table =
        load_table(file.string(), TableFormat::Headered, nullptr,
                   file.stem().string());
    grid.rows.push_back(make_row(table.name, table.name, "", "", table,
                                 datasets, no_refs, &any_cell_failed));
  }

  const std::string text = render_grid_text(grid);
  write_text_file(fs::path(cfg.out_dir) / "report.txt", text);
  write_text_file(fs::path(cfg.out_dir) / "report.kv", render_grid_kv(grid));
  log << text;
  return any_cell_failed ? kExitPartial : kExitOk;
}

int run_reproduce(const RunConfig& cfg, std::ostream& log) {
  require_out(cfg);
  require_paths_distinct(cfg);
  if (cfg.sources.size() < 2)
    throw DataError(
        "reproduce needs the pretrained source embedding files (--sources)");
  const std::vector<SimilarityDataset> datasets = load_datasets(cfg);
  const ReferenceSet refs = load_refs(cfg, log);

  {
    AlignedEmbeddingSet fresh = do_align(cfg, log);
    fs::create_directories(cfg.out_dir);
    write_aligned_artifact(fresh, cfg.out_dir);
  }
  // Continue from the artifact so later commands see identical bits.
  AlignedEmbeddingSet set = load_aligned_artifact(cfg.out_dir);

  Grid grid;
  for (const auto& ds : datasets) grid.datasets.push_back(ds.name);
  bool any_cell_failed = false;
  std::vector<std::string> failures;

  // Section 1: the sources themselves.
  for (std::size_t s = 0; s < set.source_count(); ++s) {
    const std::string& name = set.sources[s].name;
    grid.rows.push_back(make_row(name, name, "", "", set.source_table(s),
                                 datasets, refs, &any_cell_failed));
  }

  // One entry per produced table. Workers train and evaluate; the collector
  // below is the only writer of artifacts, logs, and report rows, consuming
  // results in submission order so output stays deterministic.
  struct ReproCell {
    std::string label, method, loss, target;
    bool ok = false;
    bool eval_failed = false;
    std::string error;  // recorded in the failure list when non-empty
    MetaModel model;
    EmbeddingTable table;
    GridRow row;
  };
  using CellGroup = std::vector<ReproCell>;
  std::vector<std::function<CellGroup()>> jobs;

  auto method_job = [&](const MethodSpec& spec) {
    jobs.push_back([spec, &set, &cfg, &datasets, &refs]() -> CellGroup {
      ReproCell cell;
      cell.label = combo_label(spec, set);
      cell.method = to_string(spec.method);
      cell.loss = method_uses_loss(spec.method) ? to_string(spec.loss) : "";
      cell.target = method_uses_target(spec.method)
                        ? set.sources[spec.target].name
                        : "";
      try {
        cell.model = build_model(spec, set, cfg);
        cell.table = build_meta_table(cell.model, set, cell.label);
        cell.row = make_row(cell.label, cell.method, cell.loss, cell.target,
                            cell.table, datasets, refs, &cell.eval_failed);
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
        cell.row = failed_row(cell.label, cell.method, cell.loss, cell.target,
                              datasets.size());
      }
      return {std::move(cell)};
    });
  };

  // Section 2: baselines.
  for (MetaMethod m : {MetaMethod::Conc, MetaMethod::Svd, MetaMethod::Avg,
                       MetaMethod::OneTon}) {
    MethodSpec spec;
    spec.method = m;
    method_job(spec);
  }

  // Section 3: autoencoders, decoupled/concatenated/averaged per loss.
  for (LossKind loss : {LossKind::MSE, LossKind::MAE, LossKind::SCP, LossKind::KL})
    for (MetaMethod m : {MetaMethod::Daeme, MetaMethod::Caeme, MetaMethod::Aaeme}) {
      MethodSpec spec;
      spec.method = m;
      spec.loss = loss;
      method_job(spec);
    }

  // Sections 4-6: target-prediction methods, one row per target source.
  // TAE and TAE+Y share a single training; the +Y variant only changes how
  // the meta vector is assembled, so one worker produces both cells.
  const MetaOptions opts = cfg.meta_options();
  for (std::size_t t = 0; t < set.source_count(); ++t) {
    jobs.push_back([t, &set, &opts, &datasets, &refs]() -> CellGroup {
      const std::string& tname = set.sources[t].name;
      MethodSpec spec;
      spec.method = MetaMethod::Tae;
      spec.target = t;
      spec.loss = LossKind::MSE;
      ReproCell a;
      a.label = combo_label(spec, set);
      a.method = "tae";
      a.loss = "mse";
      a.target = tname;
      spec.method = MetaMethod::TaePlusY;
      ReproCell b;
      b.label = combo_label(spec, set);
      b.method = "tae+y";
      b.loss = "mse";
      b.target = tname;
      try {
        MetaModel tae = train_tae(set, t, LossKind::MSE, opts, false);
        a.table = build_meta_table(tae, set, a.label);
        a.row = make_row(a.label, a.method, a.loss, a.target, a.table,
                         datasets, refs, &a.eval_failed);

        MetaModel taey = tae;
        taey.method = MetaMethod::TaePlusY;
        taey.concat_y = true;
        taey.meta_dim = tae.meta_dim + set.sources[t].dim;
        b.table = build_meta_table(taey, set, b.label);
        b.row = make_row(b.label, b.method, b.loss, b.target, b.table,
                         datasets, refs, &b.eval_failed);
        a.model = std::move(tae);
        b.model = std::move(taey);
        a.ok = b.ok = true;
      } catch (const std::exception& e) {
        a.ok = b.ok = false;
        a.error = e.what();  // one failure entry for the shared training
        a.row = failed_row(a.label, a.method, a.loss, a.target, datasets.size());
        b.row = failed_row(b.label, b.method, b.loss, b.target, datasets.size());
      }
      CellGroup group;
      group.push_back(std::move(a));
      group.push_back(std::move(b));
      return group;
    });
  }
  for (std::size_t t = 0; t < set.source_count(); ++t) {
    MethodSpec spec;
    spec.method = MetaMethod::Mte;
    spec.target = t;
    spec.loss = LossKind::MSE;
    method_job(spec);
  }

  std::vector<GridRow> rows_tae, rows_taey, rows_mte;
  for (CellGroup& group : run_cells(jobs)) {
    log << "[reproduce] " << group.front().label;
    for (std::size_t i = 1; i < group.size(); ++i)
      log << " / " << group[i].label;
    log << '\n';
    for (ReproCell& cell : group) {
      if (cell.ok)
        save_combo_artifacts(cell.model, cell.table, cell.label, cfg.out_dir);
      if (!cell.error.empty())
        failures.push_back(cell.label + ": " + cell.error);
      any_cell_failed = any_cell_failed || cell.eval_failed;
      if (cell.method == "tae")
        rows_tae.push_back(std::move(cell.row));
      else if (cell.method == "tae+y")
        rows_taey.push_back(std::move(cell.row));
      else if (cell.method == "mte")
        rows_mte.push_back(std::move(cell.row));
      else
        grid.rows.push_back(std::move(cell.row));
    }
  }
  for (auto& r : rows_tae) grid.rows.push_back(std::move(r));
  for (auto& r : rows_taey) grid.rows.push_back(std::move(r));
  for (auto& r : rows_mte) grid.rows.push_back(std::move(r));

  std::string text = render_grid_text(grid);
  const std::string deltas = render_delta_text(grid);
  if (!deltas.empty())
    text += "\nreference deltas (score - published):\n" + deltas;
  write_text_file(fs::path(cfg.out_dir) / "reproduce_report.txt", text);
  write_text_file(fs::path(cfg.out_dir) / "reproduce_report.kv",
                  render_grid_kv(grid));
  log << text;

  if (!failures.empty()) {
    log << failures.size() << " grid rows failed:\n";
    for (const auto& f : failures) log << "  " << f << '\n';
  }
  return (failures.empty() && !any_cell_failed) ? kExitOk : kExitPartial;
}

int run_export(const RunConfig& cfg, const std::string& model_path,
               const std::string& dest_path, std::ostream& log) {
  require_out(cfg);
  AlignedEmbeddingSet set = load_aligned_artifact(cfg.out_dir);
  std::ifstream in(model_path);
  if (!in) throw DataError("cannot open model file: " + model_path);
  MetaModel model = load_model(in);
  EmbeddingTable table = build_meta_table(model, set, stem_of(model_path));
  export_table(table, dest_path);
  log << "wrote " << dest_path << " (" << table.size() << " words x "
      << table.dim << ")\n";
  return kExitOk;
}

int run_grad_check(std::uint64_t seed, std::ostream& log) {
  struct Arch {
    const char* name;
    std::vector<std::size_t> dims;
    std::vector<Activation> acts;
  };
  const std::vector<Arch> arches = {
      {"linear", {6, 4}, {Activation::Linear}},
      {"tanh", {6, 5, 4}, {Activation::Tanh, Activation::Tanh}},
      {"tanh+log_softmax", {6, 5, 4}, {Activation::Tanh, Activation::LogSoftmax}},
  };
  const double tolerance = 1e-4;
  bool all_ok = true;
  std::size_t combo = 0;
  for (LossKind loss : {LossKind::MSE, LossKind::MAE, LossKind::KL, LossKind::SCP}) {
    for (const auto& arch : arches) {
      double worst = 0.0;
      std::size_t valid = 0;
      for (std::size_t trial = 0; valid < 20 && trial < 400; ++trial) {
        const std::uint64_t s = seed + 1000003ULL * combo + trial;
        DenseNet net = init_net(arch.dims, arch.acts, 0.0, s,
                                InitOptions{1.0, true});
        std::mt19937_64 rng(s ^ 0x5bf03635d6a5c9b3ULL);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::vector<double> x(arch.dims.front()), y(arch.dims.back());
        for (double& v : x) v = unit(rng);
        for (double& v : y) v = unit(rng);
        if (loss == LossKind::SCP && l2_norm(y) < 0.1) continue;
        if (loss == LossKind::MAE) {
          // Keep clear of the |.| kink so finite differences stay valid.
          const std::vector<double> y_hat = eval_forward(net, x);
          double min_gap = 1e9;
          for (std::size_t i = 0; i < y.size(); ++i)
            min_gap = std::min(min_gap, std::fabs(y_hat[i] - y[i]));
          if (min_gap < 1e-3) continue;
        }
        worst = std::max(worst, grad_check(net, loss, x, y));
        ++valid;
      }
      const bool ok = valid >= 20 && worst < tolerance;
      all_ok = all_ok && ok;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3e", worst);
      log << "loss=" << to_string(loss) << " arch=" << arch.name
          << " seeds=" << valid << " max_rel_err=" << buf
          << (ok ? "" : "  EXCEEDS TOLERANCE") << '\n';
      ++combo;
    }
  }
  log << (all_ok ? "grad-check PASS\n" : "grad-check FAIL\n");
  return all_ok ? kExitOk : kExitPartial;
}

}  // namespace metaemb
