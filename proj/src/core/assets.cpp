#include "instructforge/core/assets.hpp"

#include <cstdlib>

#include "instructforge/util/files.hpp"
#include "instructforge/util/hash.hpp"

#ifndef INSTRUCTFORGE_ASSET_DIR
#define INSTRUCTFORGE_ASSET_DIR "assets"
#endif

namespace instructforge {

std::filesystem::path asset_dir() {
  if (const char* env = std::getenv("INSTRUCTFORGE_ASSET_DIR"); env && *env) return env;
  return INSTRUCTFORGE_ASSET_DIR;
}

std::filesystem::path default_prompt_path() { return asset_dir() / "rewrite_prompt.txt"; }
std::filesystem::path default_chat_template_path() { return asset_dir() / "chat_template.txt"; }
std::filesystem::path default_speaker_catalog_path() { return asset_dir() / "speakers.jsonl"; }

PromptAsset PromptAsset::load(const std::filesystem::path& path) {
  return from_text(util::read_file(path));
}

PromptAsset PromptAsset::from_text(std::string text) {
  PromptAsset p;
  p.digest = util::sha256_hex(text);
  p.text = std::move(text);
  return p;
}

}  // namespace instructforge
