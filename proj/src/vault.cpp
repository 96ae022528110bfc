#include "perpamm/vault.hpp"

#include "perpamm/error.hpp"

namespace perpamm {

Shares Vault::deposit(const std::string& account, Money assets) {
    if (assets <= Money{}) throw Error(ErrorCode::ZeroAmount, "deposit must be positive");

    Shares minted = 0;
    if (total_shares_ == 0) {
        minted = assets.units();
    } else {
        if (total_assets_ <= Money{}) {
            throw Error(ErrorCode::InsolventVault, "vault has shares outstanding but no assets");
        }
        minted = divide(static_cast<Wide>(assets.units()) * total_shares_, total_assets_.units(),
                        Rounding::Floor);
    }
    if (minted == 0) {
        throw Error(ErrorCode::ZeroShareMint, "deposit of " + assets.to_string() + " mints zero shares");
    }
    total_assets_ += assets;
    total_shares_ += minted;
    balances_[account] += minted;
    return minted;
}

Money Vault::preview_redeem(Shares shares) const {
    if (shares <= 0) throw Error(ErrorCode::ZeroAmount, "redeem must be positive");
    if (shares > total_shares_) throw Error(ErrorCode::InsufficientShares, "redeem exceeds supply");
    return Money::from_units(divide(static_cast<Wide>(shares) * total_assets_.units(), total_shares_,
                                    Rounding::Floor));
}

Money Vault::redeem(const std::string& account, Shares shares) {
    if (shares <= 0) throw Error(ErrorCode::ZeroAmount, "redeem must be positive");
    const auto it = balances_.find(account);
    if (it == balances_.end() || it->second < shares) {
        throw Error(ErrorCode::InsufficientShares,
                    account + " holds " + std::to_string(it == balances_.end() ? 0 : it->second) +
                        " shares, cannot redeem " + std::to_string(shares));
    }
    const Money assets = preview_redeem(shares);
    total_assets_ -= assets;
    total_shares_ -= shares;
    if ((it->second -= shares) == 0) balances_.erase(it);
    return assets;
}

void Vault::credit(Money amount) {
    if (amount < Money{}) throw Error(ErrorCode::DomainError, "credit must be non-negative");
    total_assets_ += amount;
}

void Vault::debit(Money amount) {
    if (amount < Money{}) throw Error(ErrorCode::DomainError, "debit must be non-negative");
    if (amount > total_assets_) {
        throw Error(ErrorCode::InsolventVault, "vault holds " + total_assets_.to_string() +
                                                   ", cannot pay " + amount.to_string());
    }
    total_assets_ -= amount;
}

Shares Vault::balance(const std::string& account) const {
    const auto it = balances_.find(account);
    return it == balances_.end() ? 0 : it->second;
}

double Vault::share_price() const {
    if (total_shares_ == 0) return 1.0;
    return static_cast<double>(total_assets_.units()) / static_cast<double>(total_shares_);
}

}  // namespace perpamm
