#pragma once

#include <filesystem>
#include <string>

namespace instructforge {

// Directory holding the shipped prompt, chat template and speaker catalog.
// INSTRUCTFORGE_ASSET_DIR overrides the compiled-in location.
std::filesystem::path asset_dir();

std::filesystem::path default_prompt_path();
std::filesystem::path default_chat_template_path();
std::filesystem::path default_speaker_catalog_path();

// Rewrite instruction sent ahead of every text; its digest versions cached
// rewrites.
struct PromptAsset {
  std::string text;
  std::string digest;

  static PromptAsset load(const std::filesystem::path& path);
  static PromptAsset from_text(std::string text);
};

}  // namespace instructforge
