# app/models/__init__.py
from .model import AuctionParams, EffectiveParams, Order, effective_params, effective_auction
