#include <system_error>

#include <json.hpp>

#include "iqaforge/csv.hpp"
#include "iqaforge/error.hpp"
#include "iqaforge/generate.hpp"
#include "iqaforge/parallel.hpp"

namespace iqaforge {

std::string image_file_name(std::string_view id) {
  std::string out(id);
  for (char& c : out) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return out + ".png";
}

namespace {

struct SubjectOutput {
  std::vector<ImageRecord> rows;
  std::vector<GenerationFailure> failures;
};

SubjectOutput expand_one(const ImageRecord& src, const std::filesystem::path& base, const DistortionLadder& ladder,
                         const std::filesystem::path& out_dir) {
  SubjectOutput out;
  std::filesystem::path in_path(src.path);
  if (in_path.is_relative()) in_path = base / in_path;

  PixelImage img;
  try {
    img = read_image(in_path);
  } catch (const Error& e) {
    out.failures.push_back({in_path.string(), e.what()});
    return out;
  }

  auto emit = [&](ImageRecord rec, const PixelImage& pixels) {
    const std::string rel = "images/" + image_file_name(rec.id);
    try {
      write_image(pixels, out_dir / rel);
    } catch (const Error& e) {
      out.failures.push_back({(out_dir / rel).string(), e.what()});
      return;
    }
    rec.path = rel;
    out.rows.push_back(std::move(rec));
  };

  ImageRecord pristine = src;
  pristine.subject_id = src.id;
  pristine.family.clear();
  pristine.level.reset();
  emit(pristine, img);

  for (const auto& spec : ladder.entries) {
    ImageRecord rec;
    rec.id = distorted_id(src.id, spec);
    rec.subject_id = src.id;
    rec.source = src.source;
    rec.family = std::string(family_token(spec.family));
    rec.level = spec.level;
    emit(std::move(rec), apply(img, spec));
  }
  return out;
}

}  // namespace

GenerationReport generate_dataset(std::span<const ImageRecord> pristine, const std::filesystem::path& pristine_base,
                                  const DistortionLadder& ladder, const std::filesystem::path& out_dir, int jobs) {
  for (const auto& spec : ladder.entries) validate(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory '" + out_dir.string() + "': " + ec.message());

  std::vector<SubjectOutput> parts(pristine.size());
  parallel_for(pristine.size(), jobs, [&](std::size_t i) {
    try {
      parts[i] = expand_one(pristine[i], pristine_base, ladder, out_dir);
    } catch (const Error& e) {
      parts[i].failures.push_back({pristine[i].path, e.what()});
    }
  });

  GenerationReport report;
  for (auto& p : parts) {
    report.records.insert(report.records.end(), std::make_move_iterator(p.rows.begin()),
                          std::make_move_iterator(p.rows.end()));
    report.failures.insert(report.failures.end(), p.failures.begin(), p.failures.end());
  }

  nlohmann::ordered_json meta;
  meta["jpeg_codec"] = jpeg_codec_version();
  meta["png_codec"] = png_codec_version();
  meta["pristine_count"] = pristine.size();
  meta["row_count"] = report.records.size();
  meta["ladder"] = nlohmann::ordered_json::array();
  for (const auto& spec : ladder.entries) {
    meta["ladder"].push_back({{"family", family_token(spec.family)}, {"level", spec.level}, {"parameter", spec.parameter}});
  }
  meta["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : report.failures) meta["failures"].push_back({{"path", f.path}, {"message", f.message}});

  write_manifest(out_dir / "manifest.csv", report.records);
  write_text_file(out_dir / "generation.json", meta.dump(2) + "\n");
  return report;
}

}  // namespace iqaforge
